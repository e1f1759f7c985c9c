#![allow(dead_code)]

use std::collections::BTreeMap;

use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use lincost::lang::{name, Env, Loaded, Ty, Value};
use lincost::linmap::{PMat, Scalar};
use lincost::lp::{LPProblem, LinExpr, Rel};
use lincost::mapinfer::{conserves, FunReport};
use lincost::potential::{binom, indices_at, potential, stirling2, AnnVec, Basis, Index, Seg};
use lincost::Rational;

pub fn seeded() -> ChaCha8Rng {
    let seed = std::env::var("LINCOST_SEED").ok().and_then(|s| s.parse().ok()).unwrap_or(0x5eed);
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn rat(n: i64) -> Rational {
    Rational::from_integer(n.into())
}

pub fn ix(s: &str) -> Index {
    s.parse().unwrap()
}

pub fn bools(n: usize, rng: &mut impl Rng) -> Value {
    Value::list((0..n).map(|_| Value::Bool(rng.gen())))
}

/// A random value of `t`; lists have at most `max_len` elements.
pub fn value_of(t: &Ty, max_len: usize, rng: &mut impl Rng) -> Value {
    match t {
        Ty::Bool | Ty::Alpha => Value::Bool(rng.gen()),
        Ty::List(e) => {
            let n = rng.gen_range(0..=max_len);
            Value::list((0..n).map(|_| value_of(e, max_len.min(3), rng)))
        }
        Ty::Pair(a, b) => Value::pair(value_of(a, max_len, rng), value_of(b, max_len, rng)),
        Ty::Fun(..) => panic!("no random closures"),
    }
}

pub fn random_basis(max: u32, rng: &mut impl Rng) -> Basis {
    if rng.gen() {
        Basis::poly(rng.gen_range(1..=max))
    } else {
        Basis::exp(rng.gen_range(2..=max.max(2)))
    }
}

pub fn small_rat(rng: &mut impl Rng) -> Rational {
    Rational::new(rng.gen_range(-20i64..=20).into(), rng.gen_range(1i64..=6).into())
}

fn list_indices(x: &str, basis: Basis) -> Vec<Index> {
    indices_at(&[Seg::var(x)], &Ty::list(Ty::Bool), basis)
}

fn phi(x: &str, v: &Value, p: &AnnVec, basis: Basis) -> Rational {
    let env = Env::new().bind(name(x), v.clone());
    let n = name(x);
    let t = Ty::list(Ty::Bool);
    potential(&env, [(&n, &t)], p, basis)
}

fn concrete(out: &BTreeMap<Index, Scalar>) -> Result<AnnVec, String> {
    let mut q = AnnVec::new();
    for (i, s) in out {
        match s {
            Scalar::Rat(r) => q.set(i.clone(), r.clone()),
            other => return Err(format!("non-rational entry {other} at {i}")),
        }
    }
    Ok(q)
}

/// Destructing `h::t` with `shift` keeps the potential, for any annotation.
pub fn check_shift_conservation(basis: Basis, len: usize, rng: &mut impl Rng) -> Result<(), String> {
    let v = bools(len.max(1), rng);
    let Value::Cons(_, t) = &v else { unreachable!() };
    let mut p = AnnVec::new();
    for i in list_indices("x", basis).into_iter().chain([Index::constant()]) {
        p.set(i, small_rat(rng));
    }
    let q = concrete(&PMat::shift(&[Seg::var("x")], &[Seg::var("y")], basis).apply(&p).ok_or("symbolic")?)?;
    let (a, b) = (phi("x", &v, &p, basis), phi("y", t, &q, basis));
    if a == b {
        Ok(())
    } else {
        Err(format!("{basis}: |v| = {}: {a} before, {b} after", len.max(1)))
    }
}

/// `nil` keeps the constant and the empty list carries nothing.
pub fn check_nil_conservation(basis: Basis, rng: &mut impl Rng) -> Result<(), String> {
    let mut p = AnnVec::new();
    for i in list_indices("x", basis).into_iter().chain([Index::constant()]) {
        p.set(i, small_rat(rng));
    }
    let out = PMat::nil(&[Seg::var("x")], basis).apply(&p).ok_or("symbolic")?;
    let mut q = AnnVec::new();
    for (i, s) in out {
        match s {
            Scalar::Rat(r) => q.set(i, r),
            Scalar::Havoc => q.set(i, small_rat(rng)),
            Scalar::Affine(_) => return Err("affine entry".into()),
        }
    }
    let (a, b) = (phi("x", &Value::Nil, &p, basis), phi("x", &Value::Nil, &q, basis));
    if a == b {
        Ok(())
    } else {
        Err(format!("{basis}: {a} vs {b}"))
    }
}

/// `unshift(x, y) · shift(z, x)` moves `z` to `y`.
pub fn check_inverse(basis: Basis) -> Result<(), String> {
    let (x, y, z) = ([Seg::var("x")], [Seg::var("y")], [Seg::var("z")]);
    let m = PMat::unshift(&x, &y, basis).compose(&PMat::shift(&z, &x, basis)).map_err(|e| e.to_string())?;
    let rel: Vec<Index> = basis.list_leaves().into_iter().map(|l| Index::new(vec![], l)).collect();
    let want = PMat::mv(&z, &y, &rel);
    let rows: Vec<Index> = list_indices("y", basis).into_iter().chain([Index::constant()]).collect();
    let cols: Vec<Index> =
        list_indices("z", basis).into_iter().chain(list_indices("x", basis)).chain([Index::constant()]).collect();
    if m.view(&rows, &cols) == want.view(&rows, &cols) {
        Ok(())
    } else {
        Err(format!("{basis}: {:?}", m.view(&rows, &cols)))
    }
}

pub fn check_pascal(n: u64, k: u64) -> Result<(), String> {
    if binom(n + 1, k + 1) == binom(n, k + 1) + binom(n, k) {
        Ok(())
    } else {
        Err(format!("binom({n}, {k})"))
    }
}

pub fn check_stirling(n: u64, k: u64) -> Result<(), String> {
    if stirling2(n + 1, k + 1) == stirling2(n, k + 1) * (k + 1) + stirling2(n, k) {
        Ok(())
    } else {
        Err(format!("stirling2({n}, {k})"))
    }
}

pub fn random_scalar(rng: &mut impl Rng) -> Scalar {
    match rng.gen_range(0..4) {
        0 => Scalar::Havoc,
        1 => Scalar::zero(),
        _ => Scalar::Rat(small_rat(rng)),
    }
}

/// Havoc absorbs sums and nonzero products; zero annihilates havoc.
pub fn check_havoc_laws(a: &Scalar, b: &Scalar) -> Result<(), String> {
    let h = Scalar::Havoc;
    let ab = a.mul(b).map_err(|e| e.to_string())?;
    let ba = b.mul(a).map_err(|e| e.to_string())?;
    let ok = a.add(&h) == h
        && h.add(a) == h
        && a.add(b) == b.add(a)
        && ab == ba
        && (if a.is_zero() { a.mul(&h).unwrap().is_zero() } else { a.mul(&h).unwrap() == h })
        && (!(a.is_havoc() || b.is_havoc()) || a.add(b) == h)
        && (!(a.is_havoc() && !b.is_zero()) || ab == h);
    if ok {
        Ok(())
    } else {
        Err(format!("laws fail for {a} and {b}"))
    }
}

fn random_block(prefix: &str, n: usize, rng: &mut impl Rng) -> (PMat, Vec<Index>) {
    let idx: Vec<Index> = (1..=n as u32).map(|k| ix(&format!("{prefix}.deg{k}"))).collect();
    let dense: Vec<Vec<Scalar>> =
        (0..n).map(|_| (0..n).map(|_| if rng.gen_bool(0.3) { Scalar::zero() } else { Scalar::Rat(small_rat(rng)) }).collect()).collect();
    (PMat::from_dense(&idx, &idx, &dense), idx)
}

/// Composing matrices over disjoint supports gives the block pair.
pub fn check_extension(rng: &mut impl Rng) -> Result<(), String> {
    let (a, ia) = random_block("x", rng.gen_range(1..=4), rng);
    let (b, ib) = random_block("y", rng.gen_range(1..=4), rng);
    let ab = a.compose(&b).map_err(|e| e.to_string())?;
    let ba = b.compose(&a).map_err(|e| e.to_string())?;
    let all: Vec<Index> = ia.iter().chain(&ib).cloned().collect();
    for i in &all {
        for j in &all {
            let want = if ia.contains(i) && ia.contains(j) {
                a.get(i, j)
            } else if ib.contains(i) && ib.contains(j) {
                b.get(i, j)
            } else {
                Scalar::zero()
            };
            if ab.get(i, j) != want || ba.get(i, j) != want {
                return Err(format!("entry ({i}, {j})"));
            }
        }
    }
    Ok(())
}

/// `Φ(a·p + b·q) = a·Φ(p) + b·Φ(q)`.
pub fn check_linearity(basis: Basis, len: usize, rng: &mut impl Rng) -> Result<(), String> {
    let v = bools(len, rng);
    let mut p = AnnVec::new();
    let mut q = AnnVec::new();
    for i in list_indices("x", basis).into_iter().chain([Index::constant()]) {
        p.set(i.clone(), small_rat(rng));
        q.set(i, small_rat(rng));
    }
    let (a, b) = (small_rat(rng), small_rat(rng));
    let lhs = phi("x", &v, &p.scale(&a).add(&q.scale(&b)), basis);
    let rhs = a * phi("x", &v, &p, basis) + b * phi("x", &v, &q, basis);
    if lhs == rhs {
        Ok(())
    } else {
        Err(format!("{lhs} vs {rhs}"))
    }
}

/// Soundness of one inferred or checked matrix on one random input.
pub fn check_sound_once(loaded: &Loaded, callee: &str, r: &FunReport, basis: Basis, rng: &mut impl Rng) -> Result<(), String> {
    let input = value_of(&r.sig.arg, 12, rng);
    let (out, _) = loaded.call(callee, input.clone(), 10_000_000).map_err(|e| e.to_string())?;
    let mut ann = AnnVec::new();
    for i in r.cols.iter() {
        ann.set(i.clone(), rat(rng.gen_range(0..=5)));
    }
    if conserves(&r.sig, &input, &out, &ann, basis) {
        Ok(())
    } else {
        Err(format!("{}: gains potential on {input} -> {out}", r.name))
    }
}

/// A random problem in `max c·x, A x ≤ b, x ≥ 0` form.
pub struct Canonical {
    pub a: Vec<Vec<Rational>>,
    pub b: Vec<Rational>,
    pub c: Vec<Rational>,
}

impl Canonical {
    pub fn random(rng: &mut impl Rng) -> Canonical {
        let n = rng.gen_range(1..=3);
        let m = rng.gen_range(1..=4);
        let r = |rng: &mut ChaCha8Rng| rat(rng.gen_range(-4..=6));
        let mut inner = ChaCha8Rng::seed_from_u64(rng.gen());
        Canonical {
            a: (0..m).map(|_| (0..n).map(|_| r(&mut inner)).collect()).collect(),
            b: (0..m).map(|_| rat(inner.gen_range(-2..=9))).collect(),
            c: (0..n).map(|_| r(&mut inner)).collect(),
        }
    }

    pub fn primal(&self) -> LPProblem {
        let mut p = LPProblem::new();
        let xs: Vec<_> = (0..self.c.len()).map(|j| p.add_var(format!("x{j}"), true)).collect();
        for (row, b) in self.a.iter().zip(&self.b) {
            let mut e = LinExpr::zero();
            for (j, q) in row.iter().enumerate() {
                e.add_term(xs[j], q.clone());
            }
            p.le(e, LinExpr::constant(b.clone()));
        }
        let mut obj = LinExpr::zero();
        for (j, q) in self.c.iter().enumerate() {
            obj.add_term(xs[j], q.clone());
        }
        p.maximize(obj);
        p
    }

    /// `min b·y, Aᵀy ≥ c, y ≥ 0`, stated as a maximization of `-b·y`.
    pub fn dual(&self) -> LPProblem {
        let mut p = LPProblem::new();
        let ys: Vec<_> = (0..self.b.len()).map(|i| p.add_var(format!("y{i}"), true)).collect();
        for (j, c) in self.c.iter().enumerate() {
            let mut e = LinExpr::zero();
            for (i, row) in self.a.iter().enumerate() {
                e.add_term(ys[i], row[j].clone());
            }
            p.ge(e, LinExpr::constant(c.clone()));
        }
        let mut obj = LinExpr::zero();
        for (i, b) in self.b.iter().enumerate() {
            obj.add_term(ys[i], -b.clone());
        }
        p.maximize(obj);
        p
    }

    /// Best objective over all feasible vertices, by enumeration.
    pub fn vertex_optimum(&self) -> Option<Rational> {
        let n = self.c.len();
        let mut rows: Vec<(Vec<Rational>, Rational)> = self.a.iter().cloned().zip(self.b.iter().cloned()).collect();
        for j in 0..n {
            let mut e = vec![Rational::zero(); n];
            e[j] = -Rational::one();
            rows.push((e, Rational::zero()));
        }
        let mut best: Option<Rational> = None;
        for pick in subsets(rows.len(), n) {
            let sys: Vec<_> = pick.iter().map(|&k| rows[k].clone()).collect();
            let Some(x) = solve_square(sys) else { continue };
            if rows.iter().all(|(a, b)| dot(a, &x) <= *b) {
                let v = dot(&self.c, &x);
                if best.as_ref().is_none_or(|b| v > *b) {
                    best = Some(v);
                }
            }
        }
        best
    }
}

fn dot(a: &[Rational], x: &[Rational]) -> Rational {
    a.iter().zip(x).map(|(p, q)| p * q).fold(Rational::zero(), |s, t| s + t)
}

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    if n < k {
        return vec![];
    }
    let mut out = subsets(n - 1, k);
    for mut s in subsets(n - 1, k - 1) {
        s.push(n - 1);
        out.push(s);
    }
    out
}

/// Gaussian elimination; `None` when singular.
fn solve_square(mut sys: Vec<(Vec<Rational>, Rational)>) -> Option<Vec<Rational>> {
    let n = sys.len();
    for col in 0..n {
        let piv = (col..n).find(|&r| !sys[r].0[col].is_zero())?;
        sys.swap(col, piv);
        let (prow, pb) = sys[col].clone();
        for r in 0..n {
            if r != col && !sys[r].0[col].is_zero() {
                let f = &sys[r].0[col] / &prow[col];
                for k in 0..n {
                    let d = &f * &prow[k];
                    sys[r].0[k] -= d;
                }
                sys[r].1 -= &f * &pb;
            }
        }
    }
    Some(sys.iter().enumerate().map(|(i, (row, b))| b / &row[i]).collect())
}

/// A random general problem: free and bounded variables, all three relations.
pub fn random_lp(rng: &mut impl Rng) -> LPProblem {
    let mut p = LPProblem::new();
    let n = rng.gen_range(1..=5);
    let vars: Vec<_> = (0..n).map(|j| p.add_var(format!("v{j}"), rng.gen_bool(0.7))).collect();
    for &v in &vars {
        // Keep the region bounded so most instances have an optimum.
        p.le(LinExpr::var(v), LinExpr::int(rng.gen_range(1..=10)));
        p.ge(LinExpr::var(v), LinExpr::int(-rng.gen_range(0..=10)));
    }
    for _ in 0..rng.gen_range(0..=5) {
        let mut e = LinExpr::zero();
        for &v in &vars {
            if rng.gen_bool(0.6) {
                e.add_term(v, small_rat(rng));
            }
        }
        let rel = match rng.gen_range(0..5) {
            0 => Rel::Eq,
            1 | 2 => Rel::Ge,
            _ => Rel::Le,
        };
        p.add(e, rel, LinExpr::constant(small_rat(rng)));
    }
    let mut obj = LinExpr::zero();
    for &v in &vars {
        obj.add_term(v, small_rat(rng));
    }
    p.maximize(obj);
    p
}
