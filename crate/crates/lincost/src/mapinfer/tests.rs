use std::collections::HashMap;

use super::*;
use crate::lang::{name, parse_program, Program};
use crate::linmap::{PMat, Scalar};
use crate::potential::{AnnVec, Basis, Index};
use crate::Rational;

const HALF: &str = "fun half lst = case lst of [] -> [] | x1::xs1 -> case xs1 of [] -> [] | x2::xs2 -> let tmp = half xs2 in x1::tmp";

fn ix(s: &str) -> Index {
    s.parse().unwrap()
}

fn ixs(s: &[&str]) -> Vec<Index> {
    s.iter().map(|x| ix(x)).collect()
}

fn q(n: i64, d: i64) -> Scalar {
    Scalar::Rat(Rational::new(n.into(), d.into()))
}

fn ints(m: &[&[i64]]) -> Vec<Vec<Scalar>> {
    m.iter().map(|r| r.iter().map(|n| Scalar::int(*n)).collect()).collect()
}

fn half() -> Program {
    parse_program(HALF).unwrap()
}

fn poly_matrix(m: &[&[i64]]) -> PMat {
    PMat::from_dense(&ixs(&["r.deg2", "r.deg1", "c"]), &ixs(&["a.deg2", "a.deg1", "c"]), &ints(m))
}

fn exp4_matrix(perturb: i64) -> PMat {
    let z = Scalar::zero();
    let rows = vec![
        vec![q(505 + 12 * perturb, 12), q(206, 3), Scalar::int(6), z.clone()],
        vec![Scalar::int(10), Scalar::int(22), Scalar::int(6), z.clone()],
        vec![z.clone(), Scalar::int(1), Scalar::int(3), z.clone()],
        vec![z.clone(), z.clone(), z, Scalar::one()],
    ];
    PMat::from_dense(
        &ixs(&["r.base4", "r.base3", "r.base2", "c"]),
        &ixs(&["a.base4", "a.base3", "a.base2", "c"]),
        &rows,
    )
}

fn half_sets(m: &PMat) -> DeriveResult {
    let a = Analysis::new(&half()).unwrap();
    let b = Basis::poly(2);
    let sig = FunSig { arg: a.typing.of("lst").unwrap().clone(), ret: a.typing.of("lst").unwrap().clone(), mat: m.clone() };
    let sigs = HashMap::from([(name("half"), sig)]);
    let (ctx, _) = a.unit_context(0, &sigs, b).unwrap();
    a.deriver(&sigs, b).derive(&ctx, &a.units.units[0].body).unwrap()
}

#[test]
fn half_has_three_paths_and_five_exits() {
    let r = half_sets(&poly_matrix(&[&[4, 0, 0], &[1, 2, 0], &[0, 0, 1]]));
    assert_eq!(r.s.len(), 3);
    assert_eq!(r.c.len(), 5);
}

#[test]
fn half_recursive_path() {
    let r = half_sets(&poly_matrix(&[&[4, 0, 0], &[1, 2, 0], &[0, 0, 1]]));
    let v = r.s[2].view(&ixs(&["lst.deg2", "lst.deg1", "r.deg2", "r.deg1", "c"]), &ixs(&["lst.deg2", "lst.deg1", "c"]));
    assert_eq!(v, ints(&[&[0, 0, 0], &[0, 0, 0], &[4, 0, 0], &[1, 2, 0], &[0, 0, 1]]));
}

#[test]
fn half_nil_path_havocs_the_result() {
    let r = half_sets(&poly_matrix(&[&[4, 0, 0], &[1, 2, 0], &[0, 0, 1]]));
    let v = r.s[0].view(&ixs(&["r.deg2", "r.deg1", "c"]), &ixs(&["lst.deg2", "lst.deg1", "c"]));
    assert!(v[0].iter().chain(&v[1]).all(Scalar::is_havoc));
    assert_eq!(v[2], vec![Scalar::zero(), Scalar::zero(), Scalar::one()]);
}

#[test]
fn half_argument_matrix() {
    let r = half_sets(&poly_matrix(&[&[4, 0, 0], &[1, 2, 0], &[0, 0, 1]]));
    let want = ints(&[&[1, 0, 0], &[2, 1, 0], &[1, 2, 1]]);
    let rows = ixs(&["xs2.deg2", "xs2.deg1", "c"]);
    let cols = ixs(&["lst.deg2", "lst.deg1", "c"]);
    assert!(r.c.iter().any(|m| m.view(&rows, &cols) == want));
}

#[test]
fn half_matrix_application() {
    let m = poly_matrix(&[&[4, 0, 0], &[1, 2, 0], &[0, 0, 1]]);
    let out = m.apply(&AnnVec::new().with("a.deg2", 1).with("a.deg1", 2).with("c", 1)).unwrap();
    assert_eq!(out[&ix("r.deg2")], Scalar::int(4));
    assert_eq!(out[&ix("r.deg1")], Scalar::int(5));
    assert_eq!(out[&ix("c")], Scalar::int(1));
    let out = m.apply(&AnnVec::new().with("a.deg1", 2).with("c", 1)).unwrap();
    assert_eq!(out[&ix("r.deg2")], Scalar::int(0));
    assert_eq!(out[&ix("r.deg1")], Scalar::int(4));
    assert_eq!(out[&ix("c")], Scalar::int(1));
}

#[test]
fn no_captured_constraints_for_half() {
    let a = Analysis::new(&half()).unwrap();
    assert!(a.units.units[0].captured.is_empty());
    let r = check_function(&half(), "half", &poly_matrix(&[&[4, 0, 0], &[1, 2, 0], &[0, 0, 1]]), Basis::poly(2)).unwrap();
    assert_eq!(r.status, FunStatus::Checked, "{:?}", r.failures);
}

#[test]
fn perturbed_poly_matrix_is_rejected() {
    let r = check_function(&half(), "half", &poly_matrix(&[&[5, 0, 0], &[1, 2, 0], &[0, 0, 1]]), Basis::poly(2)).unwrap();
    assert_eq!(r.status, FunStatus::Rejected);
    assert!(r.failures.iter().any(|f| f.starts_with("result path 2")), "{:?}", r.failures);
}

#[test]
fn exponential_matrix_checks() {
    let r = check_function(&half(), "half", &exp4_matrix(0), Basis::exp(4)).unwrap();
    assert_eq!(r.status, FunStatus::Checked, "{:?}", r.failures);
    let r = check_function(&half(), "half", &exp4_matrix(1), Basis::exp(4)).unwrap();
    assert_eq!(r.status, FunStatus::Rejected);
}

#[test]
fn inferred_half_dominates_the_known_matrix() {
    let r = infer_function(&half(), "half", &InferConfig::new(Basis::poly(2))).unwrap();
    assert_eq!(r.status, FunStatus::Inferred, "{:?} {:?}", r.failures, r.diagnostics);
    let v = r.matrix();
    let get = |i: usize, j: usize| v[i][j].as_rational().unwrap().clone();
    let w = |k: u32| Rational::from_integer(num_bigint::BigInt::from(10).pow(k));
    let obj = w(4) * get(0, 0) + w(3) * get(0, 1) + w(3) * get(1, 0) + w(2) * get(1, 1) + w(2) * get(2, 0) + w(1) * get(2, 1);
    assert!(obj >= w(4) * Rational::from_integer(4.into()) + w(3) + w(2) * Rational::from_integer(2.into()));
    let again = check_function(&half(), "half", &r.sig.mat, Basis::poly(2)).unwrap();
    assert_eq!(again.status, FunStatus::Checked);
}

#[test]
fn self_application_is_nonlinear() {
    let p = parse_program("fun f x = case x of [] -> [] | h::t -> f (f t)").unwrap();
    let r = infer_function(&p, "f", &InferConfig::new(Basis::poly(1))).unwrap();
    assert_eq!(r.status, FunStatus::Nonlinear);
    assert!(!r.linear);
    assert!(r.diagnostics.iter().any(|d| d.contains("nonlinear")));
}

#[test]
fn callees_are_inferred_first() {
    let p = parse_program(&format!(
        "{HALF}\nfun dbl l = case l of [] -> [] | y::ys -> y::y::dbl ys\nfun round l = case l of [] -> [] | z::zs -> z::dbl(round(half zs))"
    ))
    .unwrap();
    let r = infer_program(&p, &InferConfig::new(Basis::poly(1))).unwrap();
    for f in ["half", "dbl", "round"] {
        assert!(r[f].status.is_success(), "{f}: {:?} {:?}", r[f].status, r[f].diagnostics);
        assert!(r[f].linear);
    }
}

#[test]
fn unused_argument_keeps_only_the_constant() {
    let p = parse_program("fun k l = case l of [] -> [] | h::t -> []").unwrap();
    let r = infer_function(&p, "k", &InferConfig::new(Basis::poly(2))).unwrap();
    assert!(r.status.is_success(), "{:?}", r.diagnostics);
    let v = r.sig.mat.view(&ixs(&["a.deg2", "a.deg1", "r.deg2", "r.deg1"]), &ixs(&["a.deg2", "a.deg1", "c"]));
    assert!(v.iter().flatten().all(Scalar::is_zero), "{v:?}");
    assert_eq!(r.sig.mat.get(&ix("c"), &ix("c")), Scalar::one());
}

#[test]
fn data_values_are_checked_structurally() {
    let lb = CFType::List(Box::new(CFType::Bool));
    assert!(check_wf(&crate::lang::Value::bools(&[true, false]), &lb, Basis::poly(2)));
    assert!(!check_wf(&crate::lang::Value::Nil, &CFType::Bool, Basis::poly(2)));
    let bad = crate::lang::Value::list([crate::lang::Value::Nil]);
    assert!(!check_wf(&bad, &lb, Basis::poly(2)));
}

#[test]
fn half_closure_is_well_formed() {
    let loaded = crate::lang::load(&half(), 1000).unwrap();
    let v = loaded.get("half").unwrap().clone();
    let lb = || Box::new(CFType::List(Box::new(CFType::Bool)));
    let good = CFType::Fun(lb(), lb(), Some(std::sync::Arc::new(poly_matrix(&[&[4, 0, 0], &[1, 2, 0], &[0, 0, 1]]))));
    assert!(check_wf(&v, &good, Basis::poly(2)));
    let bad = CFType::Fun(lb(), lb(), Some(std::sync::Arc::new(poly_matrix(&[&[5, 0, 0], &[1, 2, 0], &[0, 0, 1]]))));
    assert!(!check_wf(&v, &bad, Basis::poly(2)));
    assert!(!check_wf(&v, &CFType::Bool, Basis::poly(2)));
}

#[test]
fn captured_list_closure_is_well_formed() {
    let p = parse_program("fun mk l = fun app x = case x of [] -> l | h::t -> h::(app t)").unwrap();
    let loaded = crate::lang::load(&p, 1000).unwrap();
    let (clo, _) = loaded.call("mk", crate::lang::Value::bools(&[true]), 1000).unwrap();
    let lb = || Box::new(CFType::List(Box::new(CFType::Bool)));
    assert!(check_wf(&clo, &CFType::Fun(lb(), lb(), None), Basis::poly(1)));
}
