//! Potential-transformation matrices with havoc and symbolic entries.
//!
//! A [`PMat`] is stored over the index set it actually touches, its domain.
//! Outside the domain it behaves as the identity (or as zero, for
//! projections), so matrices over different contexts compose directly.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_traits::{One, Zero};
use serde_json::{json, Value as Json};

use crate::lp::{LinExpr, VarId};
use crate::potential::{parse_rational, rational_to_string, AnnVec, Basis, Index, Leaf, Seg};
use crate::Rational;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Scalar {
    Rat(Rational),
    /// An arbitrary number.
    Havoc,
    /// A form over LP unknowns with at least one unknown.
    Affine(LinExpr),
}

/// A product of two unknown-bearing entries.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NonlinearTerm {
    pub left: LinExpr,
    pub right: LinExpr,
}

impl fmt::Display for NonlinearTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "product of unknowns ({}) * ({})", self.left, self.right)
    }
}

impl std::error::Error for NonlinearTerm {}

impl Scalar {
    pub fn zero() -> Scalar {
        Scalar::Rat(Rational::zero())
    }

    pub fn one() -> Scalar {
        Scalar::Rat(Rational::one())
    }

    pub fn int(n: i64) -> Scalar {
        Scalar::Rat(Rational::from_integer(n.into()))
    }

    pub fn unknown(v: VarId) -> Scalar {
        Scalar::Affine(LinExpr::var(v))
    }

    pub fn from_lin(e: LinExpr) -> Scalar {
        if e.is_constant() {
            Scalar::Rat(e.constant)
        } else {
            Scalar::Affine(e)
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Scalar::Rat(q) if q.is_zero())
    }

    pub fn is_havoc(&self) -> bool {
        matches!(self, Scalar::Havoc)
    }

    pub fn as_rational(&self) -> Option<&Rational> {
        match self {
            Scalar::Rat(q) => Some(q),
            _ => None,
        }
    }

    /// The entry as a form; `None` for havoc.
    pub fn as_lin(&self) -> Option<LinExpr> {
        match self {
            Scalar::Rat(q) => Some(LinExpr::constant(q.clone())),
            Scalar::Affine(e) => Some(e.clone()),
            Scalar::Havoc => None,
        }
    }

    pub fn add(&self, other: &Scalar) -> Scalar {
        match (self, other) {
            (Scalar::Havoc, _) | (_, Scalar::Havoc) => Scalar::Havoc,
            (Scalar::Rat(a), Scalar::Rat(b)) => Scalar::Rat(a + b),
            _ => Scalar::from_lin(self.as_lin().unwrap() + other.as_lin().unwrap()),
        }
    }

    pub fn mul(&self, other: &Scalar) -> Result<Scalar, NonlinearTerm> {
        if self.is_zero() || other.is_zero() {
            return Ok(Scalar::zero());
        }
        match (self, other) {
            (Scalar::Havoc, _) | (_, Scalar::Havoc) => Ok(Scalar::Havoc),
            (Scalar::Rat(a), Scalar::Rat(b)) => Ok(Scalar::Rat(a * b)),
            _ => {
                let (a, b) = (self.as_lin().unwrap(), other.as_lin().unwrap());
                a.mul(&b).map(Scalar::from_lin).ok_or(NonlinearTerm { left: a, right: b })
            }
        }
    }

    /// Substitutes values for unknowns.
    pub fn subst(&self, x: &dyn Fn(VarId) -> Rational) -> Scalar {
        match self {
            Scalar::Affine(e) => Scalar::Rat(e.eval(x)),
            s => s.clone(),
        }
    }

    pub fn to_json(&self) -> Json {
        match self {
            Scalar::Rat(q) => Json::String(rational_to_string(q)),
            Scalar::Havoc => Json::String("*".into()),
            Scalar::Affine(e) => {
                let mut m = serde_json::Map::new();
                m.insert("const".into(), Json::String(rational_to_string(&e.constant)));
                for (v, q) in &e.terms {
                    m.insert(format!("u{v}"), Json::String(rational_to_string(q)));
                }
                json!({ "aff": m })
            }
        }
    }

    pub fn from_json(j: &Json) -> Option<Scalar> {
        match j {
            Json::String(s) if s == "*" => Some(Scalar::Havoc),
            Json::String(s) => parse_rational(s).map(Scalar::Rat),
            Json::Number(n) => n.as_i64().map(Scalar::int),
            Json::Object(o) => {
                let aff = o.get("aff")?.as_object()?;
                let mut e = LinExpr::zero();
                for (k, v) in aff {
                    let q = parse_rational(v.as_str()?)?;
                    if k == "const" {
                        e.constant = q;
                    } else {
                        e.add_term(k.strip_prefix('u')?.parse().ok()?, q);
                    }
                }
                Some(Scalar::from_lin(e))
            }
            _ => None,
        }
    }
}

impl From<Rational> for Scalar {
    fn from(q: Rational) -> Scalar {
        Scalar::Rat(q)
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Rat(q) => write!(f, "{}", rational_to_string(q)),
            Scalar::Havoc => write!(f, "*"),
            Scalar::Affine(e) => write!(f, "[{e}]"),
        }
    }
}

/// Behaviour outside the domain.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Ext {
    Identity,
    Zero,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
struct Row {
    entries: BTreeMap<Index, Scalar>,
    /// Every column outside the domain holds havoc.
    tail: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PMat {
    dom: BTreeSet<Index>,
    rows: BTreeMap<Index, Row>,
    ext: Ext,
}

impl Default for PMat {
    fn default() -> Self {
        PMat::identity()
    }
}

fn list_leaves_under(prefix: &[Seg], basis: Basis) -> Vec<Index> {
    basis.list_leaves().into_iter().map(|l| Index::new(prefix.to_vec(), l)).collect()
}

impl PMat {
    pub fn identity() -> PMat {
        PMat { dom: BTreeSet::new(), rows: BTreeMap::new(), ext: Ext::Identity }
    }

    pub fn ext(&self) -> Ext {
        self.ext
    }

    pub fn domain(&self) -> &BTreeSet<Index> {
        &self.dom
    }

    fn set_row(&mut self, i: Index, row: Row) {
        self.dom.insert(i.clone());
        if row.entries.is_empty() && !row.tail {
            self.rows.remove(&i);
        } else {
            self.rows.insert(i, row);
        }
    }

    /// Sets one entry, extending the domain with both indices.
    pub fn set(&mut self, i: Index, j: Index, s: Scalar) {
        if !self.dom.contains(&j) {
            self.widen(j.clone());
        }
        if !self.dom.contains(&i) {
            self.widen(i.clone());
        }
        let row = self.rows.entry(i).or_default();
        if s.is_zero() {
            row.entries.remove(&j);
        } else {
            row.entries.insert(j, s);
        }
    }

    /// Adds `k` to the domain without changing the map.
    fn widen(&mut self, k: Index) {
        if self.dom.contains(&k) {
            return;
        }
        for row in self.rows.values_mut() {
            if row.tail {
                row.entries.insert(k.clone(), Scalar::Havoc);
            }
        }
        self.dom.insert(k.clone());
        if self.ext == Ext::Identity {
            self.rows.entry(k.clone()).or_default().entries.insert(k, Scalar::one());
        }
    }

    /// Entry of the implicitly extended matrix.
    pub fn get(&self, i: &Index, j: &Index) -> Scalar {
        if self.dom.contains(i) {
            match self.rows.get(i) {
                None => Scalar::zero(),
                Some(row) => {
                    if self.dom.contains(j) {
                        row.entries.get(j).cloned().unwrap_or_else(Scalar::zero)
                    } else if row.tail {
                        Scalar::Havoc
                    } else {
                        Scalar::zero()
                    }
                }
            }
        } else if self.ext == Ext::Identity && i == j {
            Scalar::one()
        } else {
            Scalar::zero()
        }
    }

    /// Whether row `i` holds havoc at every column outside the domain.
    pub fn row_tail(&self, i: &Index) -> bool {
        self.rows.get(i).is_some_and(|r| r.tail)
    }

    /// Row `i` over `dom`, with the tail flag.
    fn row_over(&self, i: &Index, dom: &BTreeSet<Index>) -> (Vec<(Index, Scalar)>, bool) {
        if self.dom.contains(i) {
            match self.rows.get(i) {
                None => (Vec::new(), false),
                Some(row) => {
                    let mut v: Vec<(Index, Scalar)> = row.entries.iter().map(|(k, s)| (k.clone(), s.clone())).collect();
                    if row.tail {
                        v.extend(dom.difference(&self.dom).map(|k| (k.clone(), Scalar::Havoc)));
                    }
                    (v, row.tail)
                }
            }
        } else if self.ext == Ext::Identity {
            (vec![(i.clone(), Scalar::one())], false)
        } else {
            (Vec::new(), false)
        }
    }

    /// The product `self · other` (apply `other` first).
    pub fn compose(&self, other: &PMat) -> Result<PMat, NonlinearTerm> {
        let dom: BTreeSet<Index> = self.dom.union(&other.dom).cloned().collect();
        let ext = if self.ext == Ext::Identity && other.ext == Ext::Identity { Ext::Identity } else { Ext::Zero };
        let mut out = PMat { dom: dom.clone(), rows: BTreeMap::new(), ext };
        for i in &dom {
            let (arow, atail) = self.row_over(i, &dom);
            let mut acc: BTreeMap<Index, Scalar> = BTreeMap::new();
            let mut tail = atail && other.ext == Ext::Identity;
            for (k, a) in &arow {
                if a.is_zero() {
                    continue;
                }
                let (brow, btail) = other.row_over(k, &dom);
                tail |= btail;
                for (j, b) in brow {
                    let p = a.mul(&b)?;
                    if p.is_zero() {
                        continue;
                    }
                    let e = acc.entry(j).or_insert_with(Scalar::zero);
                    *e = e.add(&p);
                }
            }
            acc.retain(|_, s| !s.is_zero());
            out.set_row(i.clone(), Row { entries: acc, tail });
        }
        Ok(out)
    }

    /// Left-to-right product of a chain: `chain(&[A, B, C]) = A·B·C`.
    pub fn chain(ms: &[&PMat]) -> Result<PMat, NonlinearTerm> {
        let mut acc = PMat::identity();
        for m in ms.iter().rev() {
            acc = m.compose(&acc)?;
        }
        Ok(acc)
    }

    /// Matrix-vector product; `None` if a symbolic entry is present.
    pub fn apply(&self, p: &AnnVec) -> Option<BTreeMap<Index, Scalar>> {
        let mut out: BTreeMap<Index, Scalar> = BTreeMap::new();
        for (i, q) in &p.0 {
            if !self.dom.contains(i) && self.ext == Ext::Identity {
                out.insert(i.clone(), Scalar::Rat(q.clone()));
            }
        }
        let outside_nonzero = p.0.iter().any(|(k, q)| !self.dom.contains(k) && !q.is_zero());
        for i in &self.dom {
            let mut acc = Scalar::zero();
            if let Some(row) = self.rows.get(i) {
                for (k, s) in &row.entries {
                    if matches!(s, Scalar::Affine(_)) {
                        return None;
                    }
                    let x = Scalar::Rat(p.get(k));
                    acc = acc.add(&s.mul(&x).ok()?);
                }
                if row.tail && outside_nonzero {
                    acc = Scalar::Havoc;
                }
            }
            out.insert(i.clone(), acc);
        }
        Some(out)
    }

    /// Replaces every unknown by its value.
    pub fn subst(&self, x: &dyn Fn(VarId) -> Rational) -> PMat {
        let mut m = self.clone();
        for row in m.rows.values_mut() {
            for s in row.entries.values_mut() {
                *s = s.subst(x);
            }
            row.entries.retain(|_, s| !s.is_zero());
        }
        m
    }

    pub fn is_concrete(&self) -> bool {
        self.rows.values().all(|r| r.entries.values().all(|s| !matches!(s, Scalar::Affine(_))))
    }

    /// Entries over explicit row and column lists.
    pub fn view(&self, rows: &[Index], cols: &[Index]) -> Vec<Vec<Scalar>> {
        rows.iter().map(|i| cols.iter().map(|j| self.get(i, j)).collect()).collect()
    }

    /// A matrix given densely over `rows × cols`, identity elsewhere.
    pub fn from_dense(rows: &[Index], cols: &[Index], entries: &[Vec<Scalar>]) -> PMat {
        let mut m = PMat::identity();
        for i in rows.iter().chain(cols) {
            m.dom.insert(i.clone());
        }
        for (i, row) in rows.iter().zip(entries) {
            for (j, s) in cols.iter().zip(row) {
                m.set(i.clone(), j.clone(), s.clone());
            }
        }
        m
    }

    pub fn to_json(&self, rows: &[Index], cols: &[Index]) -> Json {
        let mut entries = Vec::new();
        for i in rows {
            for j in cols {
                let s = self.get(i, j);
                if !s.is_zero() {
                    entries.push(json!([i.to_string(), j.to_string(), s.to_json()]));
                }
            }
        }
        json!({
            "rows": rows.iter().map(|i| i.to_string()).collect::<Vec<_>>(),
            "cols": cols.iter().map(|i| i.to_string()).collect::<Vec<_>>(),
            "entries": entries,
        })
    }

    /// Parses the matrix JSON form; returns the matrix with its row and column lists.
    pub fn from_json(j: &Json) -> Result<(PMat, Vec<Index>, Vec<Index>), String> {
        let idx_list = |key: &str| -> Result<Vec<Index>, String> {
            j.get(key)
                .and_then(Json::as_array)
                .ok_or_else(|| format!("missing `{key}`"))?
                .iter()
                .map(|s| s.as_str().ok_or("index must be a string".to_string())?.parse::<Index>().map_err(|e| e.to_string()))
                .collect()
        };
        let rows = idx_list("rows")?;
        let cols = idx_list("cols")?;
        let mut dense = vec![vec![Scalar::zero(); cols.len()]; rows.len()];
        for e in j.get("entries").and_then(Json::as_array).ok_or("missing `entries`")? {
            let e = e.as_array().filter(|a| a.len() == 3).ok_or("entry must be [row, col, value]")?;
            let pos = |v: &Json, list: &[Index]| -> Result<usize, String> {
                let i: Index = v.as_str().ok_or("index must be a string")?.parse().map_err(|e: crate::potential::IndexParseError| e.to_string())?;
                list.iter().position(|k| *k == i).ok_or_else(|| format!("index `{i}` not declared"))
            };
            let (r, c) = (pos(&e[0], &rows)?, pos(&e[1], &cols)?);
            dense[r][c] = Scalar::from_json(&e[2]).ok_or_else(|| format!("bad entry value {}", e[2]))?;
        }
        Ok((PMat::from_dense(&rows, &cols, &dense), rows, cols))
    }

    /// Moves the indices `rel` from under `x` to under `y`.
    pub fn mv(x: &[Seg], y: &[Seg], rel: &[Index]) -> PMat {
        let mut m = PMat::identity();
        for i in rel {
            let (xi, yi) = (i.under(x), i.under(y));
            m.dom.insert(xi.clone());
            m.dom.insert(yi.clone());
            m.rows.insert(yi, Row { entries: BTreeMap::from([(xi, Scalar::one())]), tail: false });
        }
        m
    }

    /// Destructs the list at `x` into its tail at `y`.
    pub fn shift(x: &[Seg], y: &[Seg], basis: Basis) -> PMat {
        let mut m = PMat::identity();
        let c = Index::constant();
        let xs = list_leaves_under(x, basis);
        for i in &xs {
            m.dom.insert(i.clone());
        }
        m.dom.insert(c.clone());
        let mut crow = BTreeMap::from([(c.clone(), Scalar::one())]);
        match basis {
            Basis::Polynomial(d) => {
                for k in 1..=d {
                    let mut e = BTreeMap::from([(Index::new(x.to_vec(), Leaf::Deg(k)), Scalar::one())]);
                    if k < d {
                        e.insert(Index::new(x.to_vec(), Leaf::Deg(k + 1)), Scalar::one());
                    }
                    m.set_row(Index::new(y.to_vec(), Leaf::Deg(k)), Row { entries: e, tail: false });
                }
                crow.insert(Index::new(x.to_vec(), Leaf::Deg(1)), Scalar::one());
            }
            Basis::Exponential(bmax) => {
                for b in 2..=bmax {
                    let mut e = BTreeMap::from([(Index::new(x.to_vec(), Leaf::Base(b)), Scalar::int(b as i64))]);
                    if b < bmax {
                        e.insert(Index::new(x.to_vec(), Leaf::Base(b + 1)), Scalar::one());
                    }
                    m.set_row(Index::new(y.to_vec(), Leaf::Base(b)), Row { entries: e, tail: false });
                }
                crow.insert(Index::new(x.to_vec(), Leaf::Base(2)), Scalar::one());
            }
        }
        m.set_row(c, Row { entries: crow, tail: false });
        m
    }

    /// Builds a list at `y` from its tail at `x`; the inverse of `shift(y, x)`.
    pub fn unshift(x: &[Seg], y: &[Seg], basis: Basis) -> PMat {
        let leaves = basis.list_leaves();
        let c = Index::constant();
        // Column vectors of the inverse, one per source index, in closed form.
        let n = leaves.len();
        let mut inv: Vec<Vec<Rational>> = vec![vec![Rational::zero(); n]; n];
        let mut cinv: Vec<Rational> = vec![Rational::zero(); n];
        match basis {
            Basis::Polynomial(_) => {
                // leaves are deg n..1: q_k = Σ_{j ≥ k} (-1)^{j-k} p_j ; c -= q_1
                for (r, lr) in leaves.iter().enumerate() {
                    let Leaf::Deg(k) = *lr else { unreachable!() };
                    for (s, ls) in leaves.iter().enumerate() {
                        let Leaf::Deg(j) = *ls else { unreachable!() };
                        if j >= k {
                            let sign = if (j - k) % 2 == 0 { 1 } else { -1 };
                            inv[r][s] = Rational::from_integer(sign.into());
                        }
                    }
                }
                let last = n - 1;
                for s in 0..n {
                    cinv[s] = -inv[last][s].clone();
                }
            }
            Basis::Exponential(_) => {
                // leaves are base B..2: q_B = p_B / B ; q_b = (p_b - q_{b+1}) / b ; c -= q_2
                for r in 0..n {
                    let Leaf::Base(b) = leaves[r] else { unreachable!() };
                    let bq = Rational::from_integer(b.into());
                    for s in 0..n {
                        let mut v = if r == s { Rational::one() } else { Rational::zero() };
                        if r > 0 {
                            v -= inv[r - 1][s].clone();
                        }
                        inv[r][s] = v / &bq;
                    }
                }
                let last = n - 1;
                for s in 0..n {
                    cinv[s] = -inv[last][s].clone();
                }
            }
        }
        let mut m = PMat::identity();
        for l in &leaves {
            m.dom.insert(Index::new(x.to_vec(), *l));
        }
        m.dom.insert(c.clone());
        for (r, lr) in leaves.iter().enumerate() {
            let entries = leaves
                .iter()
                .enumerate()
                .filter(|(s, _)| !inv[r][*s].is_zero())
                .map(|(s, ls)| (Index::new(x.to_vec(), *ls), Scalar::Rat(inv[r][s].clone())))
                .collect();
            m.set_row(Index::new(y.to_vec(), *lr), Row { entries, tail: false });
        }
        let mut crow: BTreeMap<Index, Scalar> = leaves
            .iter()
            .enumerate()
            .filter(|(s, _)| !cinv[*s].is_zero())
            .map(|(s, ls)| (Index::new(x.to_vec(), *ls), Scalar::Rat(cinv[s].clone())))
            .collect();
        crow.insert(c.clone(), Scalar::one());
        m.set_row(c, Row { entries: crow, tail: false });
        m
    }

    /// Havocs the list indices at `x`.
    pub fn nil(x: &[Seg], basis: Basis) -> PMat {
        let xs = list_leaves_under(x, basis);
        let mut m = PMat::identity();
        m.dom.extend(xs.iter().cloned());
        for i in &xs {
            let entries = xs.iter().map(|k| (k.clone(), Scalar::Havoc)).collect();
            m.rows.insert(i.clone(), Row { entries, tail: true });
        }
        m
    }

    /// Zero on the given indices, identity elsewhere.
    pub fn zero(idx: impl IntoIterator<Item = Index>) -> PMat {
        let mut m = PMat::identity();
        m.dom.extend(idx);
        m
    }

    /// Identity on the given indices, zero elsewhere.
    pub fn proj(idx: impl IntoIterator<Item = Index>) -> PMat {
        let mut m = PMat { dom: BTreeSet::new(), rows: BTreeMap::new(), ext: Ext::Zero };
        for i in idx {
            m.dom.insert(i.clone());
            m.rows.insert(i.clone(), Row { entries: BTreeMap::from([(i, Scalar::one())]), tail: false });
        }
        m
    }

    /// Zero on the given indices, identity elsewhere; the complement of [`PMat::proj`].
    pub fn proj_neg(idx: impl IntoIterator<Item = Index>) -> PMat {
        PMat::zero(idx)
    }
}

/// `lhs ≤ rhs` between two entries.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Ineq {
    pub row: Index,
    pub col: Index,
    pub lhs: LinExpr,
    pub rhs: LinExpr,
}

impl Ineq {
    pub fn is_trivial_zero(&self) -> bool {
        self.lhs.is_zero() && self.rhs.is_zero()
    }

    pub fn holds_concretely(&self) -> Option<bool> {
        if self.lhs.is_constant() && self.rhs.is_constant() {
            Some(self.lhs.constant <= self.rhs.constant)
        } else {
            None
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LeqResult {
    pub ineqs: Vec<Ineq>,
    /// Pairs dropped because the bound side is havoc.
    pub filtered: usize,
    /// Pairs with havoc on the bounded side only.
    pub havoc_left: Vec<(Index, Index)>,
}

/// Entrywise `a ≤ b` over `rows × cols`, dropping pairs where `b` is havoc.
pub fn leq_constraints(a: &PMat, b: &PMat, rows: &[Index], cols: &[Index]) -> LeqResult {
    let mut out = LeqResult::default();
    for i in rows {
        for j in cols {
            let (x, y) = (a.get(i, j), b.get(i, j));
            match (x.as_lin(), y.as_lin()) {
                (_, None) => out.filtered += 1,
                (None, Some(_)) => out.havoc_left.push((i.clone(), j.clone())),
                (Some(lhs), Some(rhs)) => out.ineqs.push(Ineq { row: i.clone(), col: j.clone(), lhs, rhs }),
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ix(s: &str) -> Index {
        s.parse().unwrap()
    }

    fn ixs(s: &[&str]) -> Vec<Index> {
        s.iter().map(|x| ix(x)).collect()
    }

    fn p(x: &str) -> Vec<Seg> {
        vec![Seg::var(x)]
    }

    fn ints(m: &[&[i64]]) -> Vec<Vec<Scalar>> {
        m.iter().map(|r| r.iter().map(|n| Scalar::int(*n)).collect()).collect()
    }

    fn q(n: i64, d: i64) -> Scalar {
        Scalar::Rat(Rational::new(n.into(), d.into()))
    }

    #[test]
    fn shift_poly2() {
        let m = PMat::shift(&p("x"), &p("y"), Basis::poly(2));
        let v = m.view(&ixs(&["x.deg2", "x.deg1", "y.deg2", "y.deg1", "c"]), &ixs(&["x.deg2", "x.deg1", "c"]));
        assert_eq!(v, ints(&[&[0, 0, 0], &[0, 0, 0], &[1, 0, 0], &[1, 1, 0], &[0, 1, 1]]));
    }

    #[test]
    fn shift_exp3() {
        let m = PMat::shift(&p("x"), &p("y"), Basis::exp(3));
        let v = m.view(&ixs(&["x.base3", "x.base2", "y.base3", "y.base2", "c"]), &ixs(&["x.base3", "x.base2", "c"]));
        assert_eq!(v, ints(&[&[0, 0, 0], &[0, 0, 0], &[3, 0, 0], &[1, 2, 0], &[0, 1, 1]]));
    }

    #[test]
    fn unshift_exp3() {
        let m = PMat::unshift(&p("x"), &p("y"), Basis::exp(3));
        let v = m.view(&ixs(&["y.base3", "y.base2", "c"]), &ixs(&["x.base3", "x.base2", "c"]));
        let z = Scalar::zero();
        assert_eq!(
            v,
            vec![
                vec![q(1, 3), z.clone(), z.clone()],
                vec![q(-1, 6), q(1, 2), z],
                vec![q(1, 6), q(-1, 2), Scalar::one()],
            ]
        );
    }

    #[test]
    fn unshift_apply_example() {
        let m = PMat::unshift(&p("tmp"), &[Seg::Ret], Basis::poly(2));
        let v = AnnVec::new().with("tmp.deg2", 4).with("tmp.deg1", 5).with("c", 1);
        let out = m.apply(&v).unwrap();
        assert_eq!(out[&ix("r.deg2")], Scalar::int(4));
        assert_eq!(out[&ix("r.deg1")], Scalar::int(1));
        assert_eq!(out[&ix("c")], Scalar::int(0));
        assert_eq!(out[&ix("tmp.deg2")], Scalar::int(0));
    }

    #[test]
    fn identity_composes() {
        let a = PMat::shift(&p("x"), &p("y"), Basis::poly(3));
        assert_eq!(PMat::identity().compose(&a).unwrap(), a);
        assert_eq!(a.compose(&PMat::identity()).unwrap(), a);
    }

    #[test]
    fn nil_rows_havoc_everywhere() {
        let n = PMat::nil(&p("x"), Basis::poly(2));
        let v = n.view(&ixs(&["x.deg2", "x.deg1", "c"]), &ixs(&["x.deg2", "x.deg1", "c", "y.deg1"]));
        assert!(v[0].iter().all(Scalar::is_havoc));
        assert!(v[1].iter().all(Scalar::is_havoc));
        assert_eq!(v[2], ints(&[&[0, 0, 1, 0]])[0]);
    }

    #[test]
    fn havoc_times_zero_column() {
        // nil(r) · zero(x): the r rows stay havoc, but those rows meet zero columns only through x.
        let n = PMat::nil(&[Seg::Ret], Basis::poly(1));
        let z = PMat::zero(ixs(&["x.deg1"]));
        let m = n.compose(&z).unwrap();
        assert!(m.get(&ix("r.deg1"), &ix("c")).is_havoc());
        assert!(m.get(&ix("r.deg1"), &ix("x.deg1")).is_zero());
    }

    #[test]
    fn nonlinear_detected() {
        let mut a = PMat::identity();
        a.set(ix("r.deg1"), ix("a.deg1"), Scalar::unknown(0));
        let mut b = PMat::identity();
        b.set(ix("a.deg1"), ix("x.deg1"), Scalar::unknown(1));
        assert!(a.compose(&b).is_err());
        let mut c = PMat::identity();
        c.set(ix("a.deg1"), ix("x.deg1"), Scalar::int(2));
        let ac = a.compose(&c).unwrap();
        assert_eq!(ac.get(&ix("r.deg1"), &ix("x.deg1")), Scalar::Affine(LinExpr::term(0, Rational::from_integer(2.into()))));
    }

    #[test]
    fn leq_filters_havoc_bound() {
        let n = PMat::nil(&[Seg::Ret], Basis::poly(1));
        let rows = ixs(&["r.deg1", "c"]);
        let r = leq_constraints(&PMat::identity(), &n, &rows, &rows);
        assert_eq!(r.filtered, 2);
        assert_eq!(r.ineqs.len(), 2);
        let r = leq_constraints(&n, &PMat::identity(), &rows, &rows);
        assert_eq!(r.havoc_left.len(), 2);
    }

    #[test]
    fn json_round_trip() {
        let rows = ixs(&["r.deg2", "r.deg1", "c"]);
        let cols = ixs(&["a.deg2", "a.deg1", "c"]);
        let m = PMat::from_dense(&rows, &cols, &ints(&[&[4, 0, 0], &[1, 2, 0], &[0, 0, 1]]));
        let j = m.to_json(&rows, &cols);
        let (back, r2, c2) = PMat::from_json(&j).unwrap();
        assert_eq!((r2.clone(), c2.clone()), (rows.clone(), cols.clone()));
        assert_eq!(back.view(&rows, &cols), m.view(&rows, &cols));
        assert_eq!(back.get(&ix("a.deg1"), &ix("a.deg1")), Scalar::zero());
    }
}
