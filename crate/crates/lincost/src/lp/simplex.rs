use std::collections::HashSet;
use std::time::Instant;

use num_traits::{One, Signed, Zero};

use super::expr::VarId;
use super::problem::{LPProblem, Rel, Solution, Status};
use crate::Rational;

type Row = Vec<(usize, Rational)>;

#[derive(Clone, Debug, Default)]
pub struct SolveOptions {
    pub deadline: Option<Instant>,
}

fn coef(row: &Row, j: usize) -> Option<&Rational> {
    row.binary_search_by_key(&j, |(c, _)| *c).ok().map(|k| &row[k].1)
}

/// `a - f·b` over sorted sparse rows.
fn axpy(a: &Row, f: &Rational, b: &Row) -> Row {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut k) = (0, 0);
    while i < a.len() || k < b.len() {
        let ca = a.get(i).map(|e| e.0).unwrap_or(usize::MAX);
        let cb = b.get(k).map(|e| e.0).unwrap_or(usize::MAX);
        if ca < cb {
            out.push(a[i].clone());
            i += 1;
        } else if cb < ca {
            out.push((cb, -(f * &b[k].1)));
            k += 1;
        } else {
            let v = &a[i].1 - f * &b[k].1;
            if !v.is_zero() {
                out.push((ca, v));
            }
            i += 1;
            k += 1;
        }
    }
    out
}

struct Tableau {
    rows: Vec<Row>,
    rhs: Vec<Rational>,
    basis: Vec<usize>,
    d: Vec<Rational>,
    w0: Rational,
    allowed: Vec<bool>,
    pivots: usize,
}

enum Outcome {
    Optimal,
    Unbounded,
    Timeout,
}

impl Tableau {
    fn pivot(&mut self, r: usize, e: usize) {
        self.pivots += 1;
        let a = coef(&self.rows[r], e).cloned().expect("pivot on a zero entry");
        if !a.is_one() {
            let inv = a.recip();
            for (_, q) in self.rows[r].iter_mut() {
                *q *= &inv;
            }
            self.rhs[r] *= &inv;
        }
        let prow = std::mem::take(&mut self.rows[r]);
        let prhs = self.rhs[r].clone();
        for i in 0..self.rows.len() {
            if i == r {
                continue;
            }
            if let Some(f) = coef(&self.rows[i], e).cloned() {
                self.rows[i] = axpy(&self.rows[i], &f, &prow);
                self.rhs[i] -= &f * &prhs;
            }
        }
        let f = self.d[e].clone();
        if !f.is_zero() {
            for (j, q) in &prow {
                self.d[*j] -= &f * q;
            }
            self.w0 += &f * &prhs;
        }
        self.rows[r] = prow;
        self.basis[r] = e;
    }

    fn run(&mut self, deadline: Option<Instant>) -> Outcome {
        loop {
            if deadline.is_some_and(|t| Instant::now() >= t) {
                return Outcome::Timeout;
            }
            // Bland: lowest-index improving column, then lowest-index basic variable among ties.
            let Some(e) = (0..self.d.len()).find(|&j| self.allowed[j] && self.d[j].is_positive()) else {
                return Outcome::Optimal;
            };
            let mut best: Option<(usize, Rational)> = None;
            for (i, row) in self.rows.iter().enumerate() {
                let Some(a) = coef(row, e) else { continue };
                if !a.is_positive() {
                    continue;
                }
                let ratio = &self.rhs[i] / a;
                let better = match &best {
                    None => true,
                    Some((bi, br)) => ratio < *br || (ratio == *br && self.basis[i] < self.basis[*bi]),
                };
                if better {
                    best = Some((i, ratio));
                }
            }
            match best {
                None => return Outcome::Unbounded,
                Some((r, _)) => self.pivot(r, e),
            }
        }
    }
}

fn finish(status: Status, pivots: usize) -> Solution {
    Solution { status, assignment: Vec::new(), objective: Rational::zero(), pivots }
}

pub fn solve(p: &LPProblem) -> Solution {
    solve_with(p, &SolveOptions::default())
}

/// Two-phase simplex with Bland's rule over exact rationals.
///
/// Free variables are split into a difference of two non-negative columns.
/// Constraints without variables are checked directly and duplicate rows
/// are solved once.
pub fn solve_with(p: &LPProblem, opts: &SolveOptions) -> Solution {
    let mut cols: Vec<(usize, Option<usize>)> = Vec::with_capacity(p.vars.len());
    let mut ncols = 0;
    for v in &p.vars {
        if v.nonneg {
            cols.push((ncols, None));
            ncols += 1;
        } else {
            cols.push((ncols, Some(ncols + 1)));
            ncols += 2;
        }
    }
    let nstruct = ncols;

    let mut seen: HashSet<(Row, Rel, Rational)> = HashSet::new();
    let mut rows: Vec<(Row, Rel, Rational)> = Vec::new();
    for c in &p.constraints {
        let e = c.normal();
        let mut rhs = -e.constant.clone();
        let mut rel = c.rel;
        if e.terms.is_empty() {
            let ok = match rel {
                Rel::Le => !rhs.is_negative(),
                Rel::Ge => !rhs.is_positive(),
                Rel::Eq => rhs.is_zero(),
            };
            if !ok {
                return finish(Status::Infeasible, 0);
            }
            continue;
        }
        let mut row: Row = Vec::new();
        for (v, q) in &e.terms {
            let (pos, neg) = cols[*v];
            row.push((pos, q.clone()));
            if let Some(n) = neg {
                row.push((n, -q.clone()));
            }
        }
        row.sort_by_key(|(j, _)| *j);
        if rhs.is_negative() {
            rhs = -rhs;
            for (_, q) in row.iter_mut() {
                *q = -q.clone();
            }
            rel = match rel {
                Rel::Le => Rel::Ge,
                Rel::Ge => Rel::Le,
                Rel::Eq => Rel::Eq,
            };
        }
        // A single non-negative column bounded below by zero is implied.
        if rel == Rel::Ge && rhs.is_zero() && row.len() == 1 && row[0].1.is_positive() {
            continue;
        }
        // With a zero right-hand side a `>=` row can take a slack instead of an artificial.
        if rel == Rel::Ge && rhs.is_zero() {
            for (_, q) in row.iter_mut() {
                *q = -q.clone();
            }
            rel = Rel::Le;
        }
        let key = (row, rel, rhs);
        if seen.insert(key.clone()) {
            rows.push(key);
        }
    }

    let m = rows.len();
    let mut t_rows: Vec<Row> = Vec::with_capacity(m);
    let mut rhs = Vec::with_capacity(m);
    let mut basis = Vec::with_capacity(m);
    let mut artificial = Vec::new();
    for (mut row, rel, b) in rows {
        match rel {
            Rel::Le => {
                row.push((ncols, Rational::one()));
                basis.push(ncols);
                ncols += 1;
            }
            Rel::Ge => {
                row.push((ncols, -Rational::one()));
                row.push((ncols + 1, Rational::one()));
                artificial.push(ncols + 1);
                basis.push(ncols + 1);
                ncols += 2;
            }
            Rel::Eq => {
                row.push((ncols, Rational::one()));
                artificial.push(ncols);
                basis.push(ncols);
                ncols += 1;
            }
        }
        t_rows.push(row);
        rhs.push(b);
    }
    let is_art: HashSet<usize> = artificial.iter().copied().collect();
    let mut t = Tableau {
        rows: t_rows,
        rhs,
        basis,
        d: vec![Rational::zero(); ncols],
        w0: Rational::zero(),
        allowed: (0..ncols).map(|j| !is_art.contains(&j)).collect(),
        pivots: 0,
    };

    if !artificial.is_empty() {
        for i in 0..m {
            if is_art.contains(&t.basis[i]) {
                for (j, q) in &t.rows[i] {
                    if !is_art.contains(j) {
                        t.d[*j] += q;
                    }
                }
                t.w0 -= &t.rhs[i];
            }
        }
        match t.run(opts.deadline) {
            Outcome::Timeout => return finish(Status::Timeout, t.pivots),
            Outcome::Unbounded => unreachable!("phase one is bounded above by zero"),
            Outcome::Optimal => {}
        }
        if t.w0.is_negative() {
            return finish(Status::Infeasible, t.pivots);
        }
        let mut keep = vec![true; m];
        for i in 0..m {
            if !is_art.contains(&t.basis[i]) {
                continue;
            }
            let repl = t.rows[i].iter().find(|(j, q)| !is_art.contains(j) && !q.is_zero()).map(|(j, _)| *j);
            match repl {
                Some(j) => t.pivot(i, j),
                None => keep[i] = false,
            }
        }
        if keep.iter().any(|k| !k) {
            let mut k = keep.iter();
            t.rows.retain(|_| *k.next().unwrap());
            let mut k = keep.iter();
            t.rhs.retain(|_| *k.next().unwrap());
            let mut k = keep.iter();
            t.basis.retain(|_| *k.next().unwrap());
        }
    }

    t.d = vec![Rational::zero(); ncols];
    for (v, q) in &p.objective.terms {
        let (pos, neg) = cols[*v];
        t.d[pos] += q;
        if let Some(n) = neg {
            t.d[n] -= q;
        }
    }
    t.w0 = p.objective.constant.clone();
    for i in 0..t.rows.len() {
        let cb = t.d[t.basis[i]].clone();
        if !cb.is_zero() {
            for (j, q) in &t.rows[i] {
                t.d[*j] -= &cb * q;
            }
            t.w0 += &cb * &t.rhs[i];
        }
    }
    match t.run(opts.deadline) {
        Outcome::Timeout => return finish(Status::Timeout, t.pivots),
        Outcome::Unbounded => return finish(Status::Unbounded, t.pivots),
        Outcome::Optimal => {}
    }

    let mut x = vec![Rational::zero(); nstruct];
    for (i, &b) in t.basis.iter().enumerate() {
        if b < nstruct {
            x[b] = t.rhs[i].clone();
        }
    }
    let assignment: Vec<Rational> = cols
        .iter()
        .map(|&(pos, neg)| match neg {
            Some(n) => &x[pos] - &x[n],
            None => x[pos].clone(),
        })
        .collect();
    let get = |v: VarId| assignment[v].clone();
    let objective = p.objective.eval(&get);
    debug_assert_eq!(objective, t.w0);
    Solution { status: Status::Optimal, assignment, objective, pivots: t.pivots }
}
