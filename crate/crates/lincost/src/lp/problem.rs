use std::collections::BTreeMap;
use std::fmt;

use num_traits::Zero;
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use super::expr::{LinExpr, VarId};
use crate::potential::rational_to_string;
use crate::Rational;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Rel {
    Le,
    Eq,
    Ge,
}

impl fmt::Display for Rel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Rel::Le => "<=",
            Rel::Eq => "=",
            Rel::Ge => ">=",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VarDecl {
    pub name: String,
    /// Lower bound 0 when set, otherwise free.
    pub nonneg: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Constraint {
    pub lhs: LinExpr,
    pub rel: Rel,
    pub rhs: LinExpr,
}

impl Constraint {
    /// `lhs - rhs`, compared against zero by `rel`.
    pub fn normal(&self) -> LinExpr {
        self.lhs.clone() - self.rhs.clone()
    }

    pub fn holds(&self, x: &dyn Fn(VarId) -> Rational) -> bool {
        let d = self.normal().eval(x);
        match self.rel {
            Rel::Le => d <= Rational::zero(),
            Rel::Eq => d.is_zero(),
            Rel::Ge => d >= Rational::zero(),
        }
    }
}

/// A maximization problem over exact rationals.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LPProblem {
    pub vars: Vec<VarDecl>,
    pub constraints: Vec<Constraint>,
    pub objective: LinExpr,
}

impl LPProblem {
    pub fn new() -> LPProblem {
        LPProblem::default()
    }

    pub fn add_var(&mut self, name: impl Into<String>, nonneg: bool) -> VarId {
        self.vars.push(VarDecl { name: name.into(), nonneg });
        self.vars.len() - 1
    }

    pub fn add(&mut self, lhs: LinExpr, rel: Rel, rhs: LinExpr) {
        debug_assert!(lhs.vars().chain(rhs.vars()).all(|v| v < self.vars.len()), "undeclared variable");
        self.constraints.push(Constraint { lhs, rel, rhs });
    }

    pub fn le(&mut self, lhs: LinExpr, rhs: LinExpr) {
        self.add(lhs, Rel::Le, rhs);
    }

    pub fn ge(&mut self, lhs: LinExpr, rhs: LinExpr) {
        self.add(lhs, Rel::Ge, rhs);
    }

    pub fn equal(&mut self, lhs: LinExpr, rhs: LinExpr) {
        self.add(lhs, Rel::Eq, rhs);
    }

    pub fn maximize(&mut self, obj: LinExpr) {
        self.objective = obj;
    }

    pub fn len(&self) -> usize {
        self.constraints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.constraints.is_empty()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Optimal,
    Infeasible,
    Unbounded,
    /// The deadline passed before the simplex finished.
    Timeout,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Optimal => "optimal",
            Status::Infeasible => "infeasible",
            Status::Unbounded => "unbounded",
            Status::Timeout => "timeout",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Solution {
    pub status: Status,
    /// One value per declared variable; empty unless optimal.
    pub assignment: Vec<Rational>,
    pub objective: Rational,
    pub pivots: usize,
}

impl Solution {
    pub fn value(&self, v: VarId) -> Rational {
        self.assignment.get(v).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn is_optimal(&self) -> bool {
        self.status == Status::Optimal
    }

    /// The solution JSON form, with variable names taken from `p`.
    pub fn to_json(&self, p: &LPProblem) -> serde_json::Value {
        serde_json::to_value(SolutionJson { sol: self, p }).expect("solution serializes")
    }
}

struct SolutionJson<'a> {
    sol: &'a Solution,
    p: &'a LPProblem,
}

impl Serialize for SolutionJson<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let vars: BTreeMap<&str, String> = self
            .sol
            .assignment
            .iter()
            .enumerate()
            .map(|(i, q)| (self.p.vars[i].name.as_str(), rational_to_string(q)))
            .collect();
        let mut st = s.serialize_struct("Solution", 3)?;
        st.serialize_field("status", &self.sol.status)?;
        st.serialize_field("vars", &vars)?;
        st.serialize_field("objective", &rational_to_string(&self.sol.objective))?;
        st.end()
    }
}

/// A constraint or bound violated by an assignment.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    Bound(VarId),
    Row(usize),
    Arity,
}

/// Verifies an assignment against every bound and constraint, by direct evaluation.
pub fn check_assignment(p: &LPProblem, x: &[Rational]) -> Result<(), Vec<Violation>> {
    if x.len() != p.vars.len() {
        return Err(vec![Violation::Arity]);
    }
    let mut bad = Vec::new();
    for (i, d) in p.vars.iter().enumerate() {
        if d.nonneg && x[i] < Rational::zero() {
            bad.push(Violation::Bound(i));
        }
    }
    let get = |v: VarId| x[v].clone();
    for (i, c) in p.constraints.iter().enumerate() {
        if !c.holds(&get) {
            bad.push(Violation::Row(i));
        }
    }
    if bad.is_empty() {
        Ok(())
    } else {
        Err(bad)
    }
}
