use std::collections::{BTreeMap, HashSet};
use std::fmt::Write;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use super::expr::{LinExpr, VarId};
use super::problem::{LPProblem, Rel};
use crate::Rational;

fn sanitize(names: &[String]) -> Vec<String> {
    let mut used = HashSet::new();
    names
        .iter()
        .map(|n| {
            let mut s: String = n.chars().map(|c| if c.is_ascii_alphanumeric() || c == '_' { c } else { '_' }).collect();
            if !s.starts_with(|c: char| c.is_ascii_alphabetic()) {
                s.insert(0, 'v');
            }
            let base = s.clone();
            let mut k = 1;
            while !used.insert(s.clone()) {
                s = format!("{base}_{k}");
                k += 1;
            }
            s
        })
        .collect()
}

fn terminates(d: &BigInt) -> bool {
    let mut d = d.clone();
    for p in [2u32, 5] {
        let p = BigInt::from(p);
        while (&d % &p).is_zero() {
            d /= &p;
        }
    }
    d.is_one()
}

/// Exact decimal rendering; only valid for terminating fractions.
fn decimal(q: &Rational) -> String {
    if q.is_integer() {
        return q.numer().to_string();
    }
    let neg = q.is_negative();
    let q = q.abs();
    let mut digits = 0usize;
    let mut scaled = q.clone();
    while !scaled.is_integer() {
        scaled *= Rational::from_integer(10.into());
        digits += 1;
    }
    let s = scaled.numer().to_string();
    let s = format!("{:0>width$}", s, width = digits + 1);
    let (int, frac) = s.split_at(s.len() - digits);
    format!("{}{int}.{frac}", if neg { "-" } else { "" })
}

/// Scales a row so every coefficient prints exactly.
fn printable(terms: &BTreeMap<VarId, Rational>, rhs: &Rational) -> (BTreeMap<VarId, Rational>, Rational) {
    let all_ok = terms.values().chain(std::iter::once(rhs)).all(|q| terminates(q.denom()));
    if all_ok {
        return (terms.clone(), rhs.clone());
    }
    let l = terms.values().chain(std::iter::once(rhs)).fold(BigInt::one(), |acc, q| acc.lcm(q.denom()));
    let k = Rational::from_integer(l);
    (terms.iter().map(|(v, q)| (*v, q * &k)).collect(), rhs * &k)
}

fn write_terms(out: &mut String, terms: &BTreeMap<VarId, Rational>, names: &[String]) {
    if terms.is_empty() {
        out.push_str(" 0");
        return;
    }
    for (i, (v, q)) in terms.iter().enumerate() {
        let neg = q.is_negative();
        let sign = match (i, neg) {
            (0, true) => " -",
            (0, false) => "",
            (_, true) => " -",
            (_, false) => " +",
        };
        let a = q.abs();
        if a.is_one() {
            let _ = write!(out, "{sign} {}", names[*v]);
        } else {
            let _ = write!(out, "{sign} {} {}", decimal(&a), names[*v]);
        }
    }
}

/// CPLEX LP text for a problem. Output depends only on the problem.
pub fn export_lp(p: &LPProblem) -> String {
    let names = sanitize(&p.vars.iter().map(|v| v.name.clone()).collect::<Vec<_>>());
    let mut out = String::new();
    out.push_str("Maximize\n obj:");
    let (obj, _) = printable(&p.objective.terms, &Rational::zero());
    write_terms(&mut out, &obj, &names);
    out.push('\n');
    out.push_str("Subject To\n");
    for (i, c) in p.constraints.iter().enumerate() {
        let e: LinExpr = c.normal();
        let rhs = -e.constant.clone();
        let (terms, rhs) = printable(&e.terms, &rhs);
        let _ = write!(out, " c{i}:");
        write_terms(&mut out, &terms, &names);
        let rel = match c.rel {
            Rel::Le => "<=",
            Rel::Eq => "=",
            Rel::Ge => ">=",
        };
        let _ = writeln!(out, " {rel} {}", decimal(&rhs));
    }
    out.push_str("Bounds\n");
    for (i, v) in p.vars.iter().enumerate() {
        if !v.nonneg {
            let _ = writeln!(out, " {} free", names[i]);
        }
    }
    out.push_str("End\n");
    out
}
