use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_traits::{One, Zero};

use crate::potential::rational_to_string;
use crate::Rational;

pub type VarId = usize;

/// An affine form `constant + Σ coeff·var`. Zero coefficients are never stored.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct LinExpr {
    pub constant: Rational,
    pub terms: BTreeMap<VarId, Rational>,
}

impl LinExpr {
    pub fn zero() -> LinExpr {
        LinExpr::default()
    }

    pub fn constant(q: Rational) -> LinExpr {
        LinExpr { constant: q, terms: BTreeMap::new() }
    }

    pub fn int(n: i64) -> LinExpr {
        LinExpr::constant(Rational::from_integer(n.into()))
    }

    pub fn var(v: VarId) -> LinExpr {
        LinExpr::term(v, Rational::one())
    }

    pub fn term(v: VarId, q: Rational) -> LinExpr {
        let mut e = LinExpr::zero();
        e.add_term(v, q);
        e
    }

    pub fn is_constant(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty() && self.constant.is_zero()
    }

    pub fn add_term(&mut self, v: VarId, q: Rational) {
        if q.is_zero() {
            return;
        }
        let e = self.terms.entry(v).or_insert_with(Rational::zero);
        *e += q;
        if e.is_zero() {
            self.terms.remove(&v);
        }
    }

    pub fn add_scaled(&mut self, other: &LinExpr, k: &Rational) {
        if k.is_zero() {
            return;
        }
        self.constant += &other.constant * k;
        for (v, q) in &other.terms {
            self.add_term(*v, q * k);
        }
    }

    pub fn scale(&self, k: &Rational) -> LinExpr {
        let mut out = LinExpr::zero();
        out.add_scaled(self, k);
        out
    }

    /// Product of two forms, `None` when both carry variables.
    pub fn mul(&self, other: &LinExpr) -> Option<LinExpr> {
        if self.is_constant() {
            Some(other.scale(&self.constant))
        } else if other.is_constant() {
            Some(self.scale(&other.constant))
        } else {
            None
        }
    }

    pub fn eval(&self, x: &dyn Fn(VarId) -> Rational) -> Rational {
        let mut acc = self.constant.clone();
        for (v, q) in &self.terms {
            acc += q * x(*v);
        }
        acc
    }

    pub fn vars(&self) -> impl Iterator<Item = VarId> + '_ {
        self.terms.keys().copied()
    }
}

impl From<Rational> for LinExpr {
    fn from(q: Rational) -> LinExpr {
        LinExpr::constant(q)
    }
}

impl Add for LinExpr {
    type Output = LinExpr;
    fn add(mut self, rhs: LinExpr) -> LinExpr {
        self.add_scaled(&rhs, &Rational::one());
        self
    }
}

impl Sub for LinExpr {
    type Output = LinExpr;
    fn sub(mut self, rhs: LinExpr) -> LinExpr {
        self.add_scaled(&rhs, &-Rational::one());
        self
    }
}

impl Neg for LinExpr {
    type Output = LinExpr;
    fn neg(self) -> LinExpr {
        self.scale(&-Rational::one())
    }
}

impl Mul<&Rational> for LinExpr {
    type Output = LinExpr;
    fn mul(self, k: &Rational) -> LinExpr {
        self.scale(k)
    }
}

impl fmt::Display for LinExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (v, q) in &self.terms {
            let neg = q < &Rational::zero();
            let a = if neg { -q.clone() } else { q.clone() };
            match (first, neg) {
                (true, true) => write!(f, "-")?,
                (true, false) => {}
                (false, true) => write!(f, " - ")?,
                (false, false) => write!(f, " + ")?,
            }
            if a.is_one() {
                write!(f, "v{v}")?;
            } else {
                write!(f, "{}·v{v}", rational_to_string(&a))?;
            }
            first = false;
        }
        if first {
            write!(f, "{}", rational_to_string(&self.constant))
        } else if !self.constant.is_zero() {
            let neg = self.constant < Rational::zero();
            let a = if neg { -self.constant.clone() } else { self.constant.clone() };
            write!(f, " {} {}", if neg { "-" } else { "+" }, rational_to_string(&a))
        } else {
            Ok(())
        }
    }
}
