//! Annotation indices, annotation vectors and the potential function.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use num_traits::{One, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::lang::{name, Name, Ty, Value};
use crate::Rational;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind", content = "max")]
pub enum Basis {
    /// Binomial coefficients up to the given degree (at least 1).
    Polynomial(u32),
    /// Stirling numbers of the second kind with bases `2..=max` (max at least 2).
    Exponential(u32),
}

impl Basis {
    pub fn poly(d: u32) -> Basis {
        assert!(d >= 1, "polynomial degree must be at least 1");
        Basis::Polynomial(d)
    }

    pub fn exp(b: u32) -> Basis {
        assert!(b >= 2, "exponential base must be at least 2");
        Basis::Exponential(b)
    }

    /// Leaves of a list index set, highest first.
    pub fn list_leaves(&self) -> Vec<Leaf> {
        match *self {
            Basis::Polynomial(d) => (1..=d).rev().map(Leaf::Deg).collect(),
            Basis::Exponential(b) => (2..=b).rev().map(Leaf::Base).collect(),
        }
    }

    /// Number of list indices.
    pub fn width(&self) -> usize {
        match *self {
            Basis::Polynomial(d) => d as usize,
            Basis::Exponential(b) => b as usize - 1,
        }
    }

    /// Value of the basis function at `leaf` for a list of length `n`.
    pub fn eval(&self, leaf: Leaf, n: u64) -> BigUint {
        match leaf {
            Leaf::Deg(k) => binom(n, k as u64),
            Leaf::Base(b) => stirling2(n + 1, b as u64),
            Leaf::Const => BigUint::one(),
        }
    }
}

impl fmt::Display for Basis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Basis::Polynomial(d) => write!(f, "poly{d}"),
            Basis::Exponential(b) => write!(f, "exp{b}"),
        }
    }
}

/// Path segment of an index.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Seg {
    Var(Name),
    /// First pair component, written `1`.
    Fst,
    /// Second pair component, written `2`.
    Snd,
    /// Function argument, written `a`.
    Arg,
    /// Result, written `r`.
    Ret,
}

impl Seg {
    pub fn var(x: &str) -> Seg {
        Seg::Var(name(x))
    }
}

impl fmt::Display for Seg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Seg::Var(x) => write!(f, "{x}"),
            Seg::Fst => write!(f, "1"),
            Seg::Snd => write!(f, "2"),
            Seg::Arg => write!(f, "a"),
            Seg::Ret => write!(f, "r"),
        }
    }
}

pub type Path = Vec<Seg>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Leaf {
    Deg(u32),
    Base(u32),
    Const,
}

impl Ord for Leaf {
    /// Higher degrees and bases first; the constant last.
    fn cmp(&self, other: &Leaf) -> Ordering {
        fn key(l: &Leaf) -> (u8, std::cmp::Reverse<u32>) {
            match *l {
                Leaf::Deg(k) => (0, std::cmp::Reverse(k)),
                Leaf::Base(b) => (1, std::cmp::Reverse(b)),
                Leaf::Const => (2, std::cmp::Reverse(0)),
            }
        }
        key(self).cmp(&key(other))
    }
}

impl PartialOrd for Leaf {
    fn partial_cmp(&self, other: &Leaf) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// An annotation slot: a path into the context and a leaf.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Index {
    pub path: Path,
    pub leaf: Leaf,
}

impl Ord for Index {
    fn cmp(&self, other: &Index) -> Ordering {
        let c = |i: &Index| i.leaf == Leaf::Const;
        c(self).cmp(&c(other)).then_with(|| self.path.cmp(&other.path)).then_with(|| self.leaf.cmp(&other.leaf))
    }
}

impl PartialOrd for Index {
    fn partial_cmp(&self, other: &Index) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Index {
    pub fn constant() -> Index {
        Index { path: Vec::new(), leaf: Leaf::Const }
    }

    pub fn new(path: Path, leaf: Leaf) -> Index {
        Index { path, leaf }
    }

    pub fn is_const(&self) -> bool {
        self.leaf == Leaf::Const
    }

    pub fn has_prefix(&self, prefix: &[Seg]) -> bool {
        !self.is_const() && self.path.starts_with(prefix)
    }

    /// The head segment of the path, if any.
    pub fn root(&self) -> Option<&Seg> {
        self.path.first()
    }

    /// Prepends `prefix` to the path.
    pub fn under(&self, prefix: &[Seg]) -> Index {
        let mut path = prefix.to_vec();
        path.extend(self.path.iter().cloned());
        Index { path, leaf: self.leaf }
    }

    /// Replaces the prefix `from` by `to`; `None` if the index is not under `from`.
    pub fn reroot(&self, from: &[Seg], to: &[Seg]) -> Option<Index> {
        if !self.has_prefix(from) {
            return None;
        }
        let mut path = to.to_vec();
        path.extend(self.path[from.len()..].iter().cloned());
        Some(Index { path, leaf: self.leaf })
    }

    /// Same path, different leaf.
    pub fn with_leaf(&self, leaf: Leaf) -> Index {
        Index { path: self.path.clone(), leaf }
    }
}

impl fmt::Display for Index {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.path {
            write!(f, "{s}.")?;
        }
        match self.leaf {
            Leaf::Deg(k) => write!(f, "deg{k}"),
            Leaf::Base(b) => write!(f, "base{b}"),
            Leaf::Const => write!(f, "c"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IndexParseError(pub String);

impl fmt::Display for IndexParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "bad index `{}`", self.0)
    }
}

impl std::error::Error for IndexParseError {}

impl FromStr for Index {
    type Err = IndexParseError;

    fn from_str(s: &str) -> Result<Index, IndexParseError> {
        let bad = || IndexParseError(s.to_string());
        if s == "c" {
            return Ok(Index::constant());
        }
        let mut parts: Vec<&str> = s.split('.').collect();
        let last = parts.pop().ok_or_else(bad)?;
        let leaf = if let Some(k) = last.strip_prefix("deg") {
            Leaf::Deg(k.parse().map_err(|_| bad())?)
        } else if let Some(b) = last.strip_prefix("base") {
            Leaf::Base(b.parse().map_err(|_| bad())?)
        } else {
            return Err(bad());
        };
        if parts.is_empty() || parts.iter().any(|p| p.is_empty()) {
            return Err(bad());
        }
        let path = parts
            .into_iter()
            .map(|p| match p {
                "1" => Seg::Fst,
                "2" => Seg::Snd,
                "a" => Seg::Arg,
                "r" => Seg::Ret,
                x => Seg::var(x),
            })
            .collect();
        Ok(Index { path, leaf })
    }
}

impl Serialize for Index {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Index {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Index, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Indices of a type relative to its own position (paths start below the variable).
pub fn indices(t: &Ty, basis: Basis) -> Vec<Index> {
    match t {
        Ty::List(_) => basis.list_leaves().into_iter().map(|l| Index::new(Vec::new(), l)).collect(),
        Ty::Pair(a, b) => {
            let mut out: Vec<Index> = indices(a, basis).iter().map(|i| i.under(&[Seg::Fst])).collect();
            out.extend(indices(b, basis).iter().map(|i| i.under(&[Seg::Snd])));
            out
        }
        Ty::Bool | Ty::Alpha | Ty::Fun(..) => Vec::new(),
    }
}

/// Indices of a type placed at `prefix`.
pub fn indices_at(prefix: &[Seg], t: &Ty, basis: Basis) -> Vec<Index> {
    indices(t, basis).iter().map(|i| i.under(prefix)).collect()
}

/// Indices of a whole context plus the constant index, sorted.
pub fn context_indices<'a>(ctx: impl IntoIterator<Item = (&'a Name, &'a Ty)>, basis: Basis) -> Vec<Index> {
    let mut out: Vec<Index> = ctx
        .into_iter()
        .flat_map(|(x, t)| indices_at(&[Seg::Var(x.clone())], t, basis))
        .collect();
    out.push(Index::constant());
    out.sort();
    out.dedup();
    out
}

pub fn binom(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc = acc * BigUint::from(n - i) / BigUint::from(i + 1);
    }
    acc
}

/// Stirling numbers of the second kind, via the explicit alternating sum.
pub fn stirling2(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    if k == 0 {
        return if n == 0 { BigUint::one() } else { BigUint::zero() };
    }
    // k! S(n,k) = sum_j (-1)^j C(k,j) (k-j)^n
    let mut pos = BigUint::zero();
    let mut neg = BigUint::zero();
    for j in 0..=k {
        let term = binom(k, j) * BigUint::from(k - j).pow(n as u32);
        if j % 2 == 0 {
            pos += term;
        } else {
            neg += term;
        }
    }
    let mut fact = BigUint::one();
    for i in 2..=k {
        fact *= BigUint::from(i);
    }
    (pos - neg) / fact
}

/// A finite map from indices to rationals; absent entries are zero.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct AnnVec(pub BTreeMap<Index, Rational>);

impl AnnVec {
    pub fn new() -> AnnVec {
        AnnVec::default()
    }

    pub fn get(&self, i: &Index) -> Rational {
        self.0.get(i).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn set(&mut self, i: Index, q: Rational) {
        if q.is_zero() {
            self.0.remove(&i);
        } else {
            self.0.insert(i, q);
        }
    }

    pub fn with(mut self, i: &str, q: i64) -> AnnVec {
        self.set(i.parse().expect("index literal"), Rational::from_integer(q.into()));
        self
    }

    pub fn scale(&self, a: &Rational) -> AnnVec {
        let mut out = AnnVec::new();
        for (i, q) in &self.0 {
            out.set(i.clone(), q * a);
        }
        out
    }

    pub fn add(&self, other: &AnnVec) -> AnnVec {
        let mut out = self.clone();
        for (i, q) in &other.0 {
            let v = out.get(i) + q;
            out.set(i.clone(), v);
        }
        out
    }

    /// Entries under `from`, re-rooted at `to`; the constant stays.
    pub fn reroot(&self, from: &[Seg], to: &[Seg]) -> AnnVec {
        let mut out = AnnVec::new();
        for (i, q) in &self.0 {
            if i.is_const() {
                out.set(i.clone(), q.clone());
            } else if let Some(j) = i.reroot(from, to) {
                out.set(j, q.clone());
            }
        }
        out
    }
}

pub fn rational_to_string(q: &Rational) -> String {
    if q.is_integer() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

pub fn parse_rational(s: &str) -> Option<Rational> {
    let s = s.trim();
    match s.split_once('/') {
        Some((p, q)) => {
            let q: num_bigint::BigInt = q.trim().parse().ok()?;
            if q.is_zero() {
                return None;
            }
            Some(Rational::new(p.trim().parse().ok()?, q))
        }
        None => Some(Rational::from_integer(s.parse().ok()?)),
    }
}

impl Serialize for AnnVec {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_map(self.0.iter().map(|(i, q)| (i.to_string(), rational_to_string(q))))
    }
}

impl<'de> Deserialize<'de> for AnnVec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<AnnVec, D::Error> {
        let raw = BTreeMap::<String, String>::deserialize(d)?;
        let mut out = AnnVec::new();
        for (k, v) in raw {
            let i: Index = k.parse().map_err(serde::de::Error::custom)?;
            let q = parse_rational(&v).ok_or_else(|| serde::de::Error::custom(format!("bad rational `{v}`")))?;
            out.set(i, q);
        }
        Ok(out)
    }
}

fn value_potential(v: &Value, t: &Ty, prefix: &mut Path, p: &AnnVec, basis: Basis) -> Rational {
    match (t, v) {
        (Ty::List(_), _) => {
            let n = v.list_len().unwrap_or(0) as u64;
            let mut acc = Rational::zero();
            for leaf in basis.list_leaves() {
                let idx = Index::new(prefix.clone(), leaf);
                if let Some(q) = p.0.get(&idx) {
                    acc += q * Rational::from_integer(basis.eval(leaf, n).into());
                }
            }
            acc
        }
        (Ty::Pair(ta, tb), Value::Pair(a, b)) => {
            prefix.push(Seg::Fst);
            let pa = value_potential(a, ta, prefix, p, basis);
            prefix.pop();
            prefix.push(Seg::Snd);
            let pb = value_potential(b, tb, prefix, p, basis);
            prefix.pop();
            pa + pb
        }
        _ => Rational::zero(),
    }
}

/// Potential of a value of type `t` whose indices sit at `prefix`.
pub fn potential_at(v: &Value, t: &Ty, prefix: &[Seg], p: &AnnVec, basis: Basis) -> Rational {
    value_potential(v, t, &mut prefix.to_vec(), p, basis)
}

/// Potential of an environment under a typed context: the constant plus every
/// variable's share.
pub fn potential<'a>(
    env: &crate::lang::Env,
    ctx: impl IntoIterator<Item = (&'a Name, &'a Ty)>,
    p: &AnnVec,
    basis: Basis,
) -> Rational {
    let mut acc = p.get(&Index::constant());
    for (x, t) in ctx {
        if let Some(v) = env.lookup(x) {
            acc += potential_at(v, t, &[Seg::Var(x.clone())], p, basis);
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::Env;

    fn rat(n: i64) -> Rational {
        Rational::from_integer(n.into())
    }

    #[test]
    fn index_sets() {
        let l = Ty::list(Ty::Bool);
        let s: Vec<String> = indices(&l, Basis::poly(2)).iter().map(|i| i.to_string()).collect();
        assert_eq!(s, ["deg2", "deg1"]);
        assert!(indices(&Ty::Bool, Basis::poly(3)).is_empty());
        let s: Vec<String> = indices(&l, Basis::exp(3)).iter().map(|i| i.to_string()).collect();
        assert_eq!(s, ["base3", "base2"]);
    }

    #[test]
    fn contexts() {
        let (x, y, b) = (name("x"), name("y"), name("b"));
        let l = Ty::list(Ty::Alpha);
        let s: Vec<String> = context_indices([(&x, &l)], Basis::poly(2)).iter().map(|i| i.to_string()).collect();
        assert_eq!(s, ["x.deg2", "x.deg1", "c"]);
        let s: Vec<String> = context_indices([(&b, &Ty::Bool)], Basis::poly(2)).iter().map(|i| i.to_string()).collect();
        assert_eq!(s, ["c"]);
        let s: Vec<String> =
            context_indices([(&x, &l), (&y, &l)], Basis::exp(3)).iter().map(|i| i.to_string()).collect();
        assert_eq!(s, ["x.base3", "x.base2", "y.base3", "y.base2", "c"]);
    }

    #[test]
    fn counting_functions() {
        assert_eq!(binom(6, 2), BigUint::from(15u32));
        assert_eq!(stirling2(4, 2), BigUint::from(7u32));
        for n in 0..=10u64 {
            assert_eq!(stirling2(n + 1, 2), BigUint::from((1u64 << n) - 1));
        }
    }

    #[test]
    fn index_round_trip() {
        for s in ["c", "x.deg2", "a.base3", "p.1.deg1", "r.2.base2"] {
            assert_eq!(s.parse::<Index>().unwrap().to_string(), s);
        }
        assert!("x".parse::<Index>().is_err());
        assert!("deg2".parse::<Index>().is_err());
    }

    #[test]
    fn potential_examples() {
        let x = name("x");
        let l = Ty::list(Ty::Bool);
        let env = Env::new().bind(x.clone(), Value::bools(&[true, true, false]));
        let p = AnnVec::new().with("x.deg3", 3).with("x.deg2", 1).with("x.deg1", 4).with("c", 5);
        assert_eq!(potential(&env, [(&x, &l)], &p, Basis::poly(3)), rat(23));
        let p = AnnVec::new().with("x.base4", 2).with("x.base2", 6).with("c", 7);
        assert_eq!(potential(&env, [(&x, &l)], &p, Basis::exp(4)), rat(51));
        let p = AnnVec::new().with("c", 9);
        assert_eq!(potential(&Env::new(), [], &p, Basis::poly(1)), rat(9));
    }

    #[test]
    fn json_form() {
        let mut p = AnnVec::new().with("x.deg2", 3);
        p.set(Index::constant(), Rational::new(1.into(), 2.into()));
        let s = serde_json::to_string(&p).unwrap();
        assert_eq!(s, r#"{"x.deg2":"3","c":"1/2"}"#);
        let back: AnnVec = serde_json::from_str(&s).unwrap();
        assert_eq!(back, p);
    }
}
