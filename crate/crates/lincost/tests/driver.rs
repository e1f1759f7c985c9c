use std::collections::BTreeMap;

use lincost::driver::{classic_bound, run_cell, run_grid, write_csv, Algo, BenchConfig, CSV_HEADER};
use proptest::prelude::*;

fn count(d: u32, c: usize, l: usize, algo: Algo) -> usize {
    let cfg = BenchConfig::new((d, d), (c, c), (l, l));
    run_cell(d, c, l, algo, &cfg).constrs.expect("cell finishes")
}

#[test]
fn csv_header_is_stable() {
    let cfg = BenchConfig { algos: vec![Algo::New], ..BenchConfig::new((1, 1), (1, 1), (0, 1)) };
    let rows = run_grid(&cfg).unwrap();
    let mut buf = Vec::new();
    write_csv(&rows, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().next().unwrap(), CSV_HEADER.join(","));
    assert_eq!(text.lines().count(), 3);
}

#[test]
fn counts_at_depth_zero() {
    for d in 1..=4u32 {
        let n = d as usize;
        assert_eq!(count(d, 3, 0, Algo::New), n * n + n + 1);
        assert_eq!(count(d, 3, 0, Algo::Classic), 2 * n + 3);
    }
}

#[test]
fn counts_are_reproducible() {
    let a: BTreeMap<_, _> = [(1, 1), (2, 1), (2, 2)].iter().map(|&(c, l)| ((c, l), count(2, c, l, Algo::Classic))).collect();
    let b: BTreeMap<_, _> = [(1, 1), (2, 1), (2, 2)].iter().map(|&(c, l)| ((c, l), count(2, c, l, Algo::Classic))).collect();
    assert_eq!(a, b);
}

#[test]
fn bound_needs_a_call() {
    assert_eq!(classic_bound(3, 0, 2), 0u32.into());
    assert_eq!(classic_bound(1, 1, 0), 1u32.into());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    // At depth zero the new method pays for its quadratic matrix while the
    // classic system stays linear in `d`, so the comparison starts at depth one.
    #[test]
    fn new_is_never_larger_past_depth_zero(d in 1u32..=3, c in 1usize..=2, l in 1usize..=2) {
        prop_assert!(count(d, c, l, Algo::New) <= count(d, c, l, Algo::Classic));
    }
}

#[test]
fn new_counts_grow_linearly_in_depth() {
    for (d, c) in [(1, 2), (2, 3), (3, 2)] {
        let n: Vec<usize> = (1..=4).map(|l| count(d, c, l, Algo::New)).collect();
        let steps: Vec<usize> = n.windows(2).map(|w| w[1] - w[0]).collect();
        assert!(steps.iter().all(|s| *s == steps[0]), "({d},{c}): {n:?}");
    }
}

#[test]
fn classic_counts_increase_with_depth() {
    for (d, c) in [(1, 1), (2, 2)] {
        let n: Vec<usize> = (0..=3).map(|l| count(d, c, l, Algo::Classic)).collect();
        assert!(n.windows(2).all(|w| w[1] > w[0]), "({d},{c}): {n:?}");
    }
}
