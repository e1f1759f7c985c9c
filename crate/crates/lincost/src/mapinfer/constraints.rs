use std::fmt;

use crate::lang::Name;
use crate::linmap::{leq_constraints, Ineq, NonlinearTerm, PMat};
use crate::potential::{indices, indices_at, Basis, Index, Seg};

use super::derive::FunSig;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Family {
    /// The result paths dominate the signature on `x`, `r` and `c`.
    Result,
    /// The result paths leave no negative potential on other variables.
    Rest,
    /// Scope exits and call arguments are non-negative.
    Exit,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::Result => "result",
            Family::Rest => "captured",
            Family::Exit => "exit",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Tagged {
    pub family: Family,
    /// Position of the path matrix inside its set.
    pub path: usize,
    pub ineq: Ineq,
}

impl fmt::Display for Tagged {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} path {} at ({}, {}): {} <= {}", self.family, self.path, self.ineq.row, self.ineq.col, self.ineq.lhs, self.ineq.rhs)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct FunConstraints {
    pub ineqs: Vec<Tagged>,
    /// Entry pairs dropped because the bound is havoc.
    pub filtered: usize,
    /// Entries with havoc only on the bounded side; each one is an unsatisfiable pair.
    pub havoc_left: Vec<(Family, Index, Index)>,
}

impl FunConstraints {
    pub fn len(&self) -> usize {
        self.ineqs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ineqs.is_empty()
    }

    /// Whether every constraint is an inequality between constants.
    pub fn is_concrete(&self) -> bool {
        self.ineqs.iter().all(|t| t.ineq.holds_concretely().is_some())
    }

    /// Constant constraints that fail.
    pub fn failures(&self) -> Vec<&Tagged> {
        self.ineqs.iter().filter(|t| t.ineq.holds_concretely() == Some(false)).collect()
    }
}

/// The inequalities stating that `fun f x = body` has signature `sig`.
///
/// `s` and `c` are the map sets of the body, `gamma` lists the indices of the
/// captured context. Pairs where both sides are zero are omitted.
pub fn fun_constraints(
    x: &Name,
    sig: &FunSig,
    s: &[PMat],
    c: &[PMat],
    gamma: &[Index],
    basis: Basis,
) -> Result<FunConstraints, NonlinearTerm> {
    let xp = [Seg::Var(x.clone())];
    let xs = indices_at(&xp, &sig.arg, basis);
    let mut cols = xs.clone();
    cols.push(Index::constant());
    let mut rows = xs.clone();
    rows.extend(indices_at(&[Seg::Ret], &sig.ret, basis));
    rows.push(Index::constant());
    let kill = PMat::zero(gamma.iter().cloned());
    let lhs = sig.mat.compose(&PMat::mv(&xp, &[Seg::Arg], &indices(&sig.arg, basis)))?;
    let zero = PMat::proj(std::iter::empty());
    let main = |i: &Index| i.is_const() || matches!(i.root(), Some(Seg::Ret)) || i.has_prefix(&xp);
    let mut out = FunConstraints::default();
    let push = |out: &mut FunConstraints, family: Family, path: usize, a: &PMat, b: &PMat, rows: &[Index]| {
        let r = leq_constraints(a, b, rows, &cols);
        out.filtered += r.filtered;
        out.havoc_left.extend(r.havoc_left.into_iter().map(|(i, j)| (family, i, j)));
        out.ineqs.extend(r.ineqs.into_iter().filter(|q| !q.is_trivial_zero()).map(|ineq| Tagged { family, path, ineq }));
    };
    for (k, m) in s.iter().enumerate() {
        let m = m.compose(&kill)?;
        push(&mut out, Family::Result, k, &lhs, &m, &rows);
        let rest: Vec<Index> = m.domain().iter().filter(|i| !main(i)).cloned().collect();
        push(&mut out, Family::Rest, k, &zero, &m, &rest);
    }
    for (k, m) in c.iter().enumerate() {
        let m = m.compose(&kill)?;
        let mut exit: Vec<Index> = m.domain().iter().cloned().collect();
        if !exit.contains(&Index::constant()) {
            exit.push(Index::constant());
        }
        push(&mut out, Family::Exit, k, &zero, &m, &exit);
    }
    Ok(out)
}
