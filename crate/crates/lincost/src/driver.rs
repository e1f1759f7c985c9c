//! Benchmark programs, the grid harness and the bundled corpus.

use std::fmt::{self, Write as _};
use std::io;
use std::str::FromStr;
use std::time::{Duration, Instant};

use num_bigint::BigUint;
use num_traits::{One, Zero};

use crate::classic::{classic_infer, ClassicConfig, ClassicError, Mode, Pins};
use crate::lang::{name, parse_program, Program, Ty};
use crate::mapinfer::{infer_program, AnalysisError, FunStatus, InferConfig};
use crate::potential::{binom, Basis};

/// Source of the synthetic pattern: `l` linearly recursive list functions,
/// each calling its predecessor `c` times in the cons branch.
///
/// `l = 0` gives the plain identity `fun f0 x0 = x0`. Otherwise the program
/// is one top-level `let synth = ...` whose value is `f{l}`, with every
/// `g{i}` bound to `f{i-1}` by a nested `let`. Each function is the identity
/// on lists.
pub fn gen_synthetic(c: usize, l: usize) -> String {
    fn def(c: usize, i: usize, depth: usize, out: &mut String) {
        let pad = "    ".repeat(depth);
        if i == 0 {
            writeln!(out, "{pad}fun f0 x0 = x0").unwrap();
            return;
        }
        writeln!(out, "{pad}let g{i} =").unwrap();
        def(c, i - 1, depth + 1, out);
        let mut call = format!("f{i} t{i}");
        for _ in 0..c {
            call = format!("g{i} ({call})");
        }
        writeln!(out, "{pad}in fun f{i} x{i} = case x{i} of [] -> [] | h{i}::t{i} -> h{i}::({call})").unwrap();
    }
    let mut out = String::new();
    if l == 0 {
        def(c, 0, 0, &mut out);
    } else {
        out.push_str("let synth =
");
        def(c, l, 1, &mut out);
    }
    out
}

/// The parsed synthetic program, with every parameter `x{i}` typed as a
/// boolean list so that the unused identity is not analysed at `α`.
pub fn synthetic_program(c: usize, l: usize) -> Program {
    let mut p = parse_program(&gen_synthetic(c, l)).expect("generated source parses");
    p.hints = (0..=l).map(|i| (name(&format!("x{i}")), Ty::list(Ty::Bool))).collect();
    p
}

/// Name under which the synthetic program exposes its outermost function.
pub fn synthetic_entry(l: usize) -> &'static str {
    if l == 0 {
        "f0"
    } else {
        "synth"
    }
}

/// `d · c^(l+1) · (C(d+l+1, d) - 1)`, the closed-form overapproximation of the
/// classic constraint recurrence.
pub fn classic_bound(d: u64, c: u64, l: u64) -> BigUint {
    let b = binom(d + l + 1, d);
    let b = if b.is_zero() { b } else { b - BigUint::one() };
    BigUint::from(d) * BigUint::from(c).pow(l as u32 + 1) * b
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Algo {
    New,
    Classic,
}

impl fmt::Display for Algo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algo::New => "new",
            Algo::Classic => "classic",
        })
    }
}

impl FromStr for Algo {
    type Err = String;

    fn from_str(s: &str) -> Result<Algo, String> {
        match s {
            "new" => Ok(Algo::New),
            "classic" => Ok(Algo::Classic),
            _ => Err(format!("unknown algorithm `{s}`")),
        }
    }
}

/// Which family of annotations the grid uses; the degree comes from the grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BasisKind {
    Poly,
    Exp,
}

impl BasisKind {
    /// Basis of width `d`.
    pub fn at(self, d: u32) -> Basis {
        match self {
            BasisKind::Poly => Basis::poly(d),
            BasisKind::Exp => Basis::exp(d + 1),
        }
    }
}

#[derive(Clone, Debug)]
pub struct BenchConfig {
    pub d: (u32, u32),
    pub c: (usize, usize),
    pub l: (usize, usize),
    pub basis: BasisKind,
    pub algos: Vec<Algo>,
    pub timeout: Duration,
    /// Classic systems with more constraints are counted but not solved.
    pub classic_solve_limit: usize,
}

impl BenchConfig {
    pub fn new(d: (u32, u32), c: (usize, usize), l: (usize, usize)) -> BenchConfig {
        BenchConfig {
            d,
            c,
            l,
            basis: BasisKind::Poly,
            algos: vec![Algo::New, Algo::Classic],
            timeout: Duration::from_secs(120),
            classic_solve_limit: 4000,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        let ok = |(a, b): (usize, usize)| a <= b;
        if self.d.0 > self.d.1 || self.d.0 == 0 || !ok(self.c) || !ok(self.l) {
            return Err("every grid range must be nonempty and degrees start at 1".into());
        }
        if self.timeout.is_zero() {
            return Err("the per-cell budget must be positive".into());
        }
        if self.algos.is_empty() {
            return Err("no algorithm selected".into());
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchRow {
    pub d: u32,
    pub c: usize,
    pub l: usize,
    pub algo: Algo,
    pub constr_secs: f64,
    pub solve_secs: f64,
    pub total_secs: f64,
    /// `None` for a cell that timed out during generation.
    pub constrs: Option<usize>,
    pub status: String,
}

impl BenchRow {
    pub fn timed_out(&self) -> bool {
        self.status == "timeout"
    }
}

pub const CSV_HEADER: [&str; 9] = ["d", "c", "l", "algo", "constr_secs", "solve_secs", "total_secs", "constrs", "status"];

/// One grid cell.
pub fn run_cell(d: u32, c: usize, l: usize, algo: Algo, cfg: &BenchConfig) -> BenchRow {
    let p = synthetic_program(c, l);
    let basis = cfg.basis.at(d);
    let start = Instant::now();
    let deadline = start + cfg.timeout;
    let mut row = BenchRow { d, c, l, algo, constr_secs: 0.0, solve_secs: 0.0, total_secs: 0.0, constrs: None, status: String::new() };
    match algo {
        Algo::New => {
            let icfg = InferConfig { deadline: Some(deadline), ..InferConfig::new(basis) };
            match infer_program(&p, &icfg) {
                Ok(reports) => {
                    row.constrs = Some(reports.values().map(|r| r.constraints).sum());
                    row.constr_secs = reports.values().map(|r| r.gen_secs).sum();
                    row.solve_secs = reports.values().map(|r| r.solve_secs).sum();
                    let bad = reports.values().find(|r| !r.status.is_success());
                    row.status = match bad {
                        None => "ok".into(),
                        Some(r) if r.status == FunStatus::Timeout => "timeout".into(),
                        Some(r) => r.status.to_string().to_lowercase(),
                    };
                }
                Err(e) => row.status = error_status(&e),
            }
        }
        Algo::Classic => {
            let ccfg = ClassicConfig {
                deadline: Some(deadline),
                store_limit: cfg.classic_solve_limit,
                ..ClassicConfig::new(basis, Mode::CostFree)
            };
            let entry = if l == 0 { "f0".to_string() } else { format!("f{l}") };
            match classic_infer(&p, &entry, &ccfg, &Pins::default()) {
                Ok(r) => {
                    row.constrs = Some(r.constraints);
                    row.constr_secs = r.gen_secs;
                    row.solve_secs = r.solve_secs;
                    row.status = r.status_name();
                }
                Err(ClassicError::Budget(_)) => row.status = "timeout".into(),
                Err(e) => row.status = format!("error: {e}"),
            }
        }
    }
    row.total_secs = start.elapsed().as_secs_f64();
    row
}

fn error_status(e: &AnalysisError) -> String {
    format!("error: {e}")
}

/// Runs every cell of the grid, `d` outermost, in a fixed order.
pub fn run_grid(cfg: &BenchConfig) -> Result<Vec<BenchRow>, String> {
    run_grid_with(cfg, |_| {})
}

/// Like [`run_grid`], reporting each row as it completes.
pub fn run_grid_with(cfg: &BenchConfig, mut progress: impl FnMut(&BenchRow)) -> Result<Vec<BenchRow>, String> {
    cfg.validate()?;
    let mut rows = Vec::new();
    for &algo in &cfg.algos {
        for d in cfg.d.0..=cfg.d.1 {
            for c in cfg.c.0..=cfg.c.1 {
                for l in cfg.l.0..=cfg.l.1 {
                    let row = run_cell(d, c, l, algo, cfg);
                    progress(&row);
                    rows.push(row);
                }
            }
        }
    }
    Ok(rows)
}

/// Writes rows as CSV with the fixed header; times to microseconds.
pub fn write_csv<W: io::Write>(rows: &[BenchRow], w: W) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(CSV_HEADER)?;
    for r in rows {
        out.write_record([
            r.d.to_string(),
            r.c.to_string(),
            r.l.to_string(),
            r.algo.to_string(),
            format!("{:.6}", r.constr_secs),
            format!("{:.6}", r.solve_secs),
            format!("{:.6}", r.total_secs),
            r.constrs.map_or_else(|| "timeout".to_string(), |n| n.to_string()),
            r.status.clone(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// One program of the realistic corpus.
#[derive(Clone, Copy, Debug)]
pub struct CorpusProgram {
    pub name: &'static str,
    /// The function the row reports on. For `map` and `filter` this is the
    /// first-order instance created by expanding the higher-order definition.
    pub entry: &'static str,
    pub source: &'static str,
}

impl CorpusProgram {
    pub fn program(&self) -> Program {
        parse_program(self.source).expect("corpus sources parse")
    }
}

macro_rules! corpus {
    ($($name:literal, $entry:literal, $file:literal;)*) => {
        vec![$(CorpusProgram { name: $name, entry: $entry, source: include_str!(concat!("../../../corpus/", $file)) }),*]
    };
}

/// The list functions of the realistic corpus.
pub fn realistic_corpus() -> Vec<CorpusProgram> {
    corpus! {
        "cons", "cons", "cons.lc";
        "uncons", "uncons", "uncons.lc";
        "map", "map_not", "map.lc";
        "filter", "filter_id", "filter.lc";
        "zip", "zip", "zip.lc";
        "unzip", "unzip", "unzip.lc";
        "insert", "insert", "insert.lc";
        "remove", "remove", "remove.lc";
        "insertion sort", "insertion_sort", "insertion_sort.lc";
        "split", "split", "split.lc";
        "merge", "merge", "merge.lc";
        "merge sort", "merge_sort", "merge_sort.lc";
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::{load, Value};

    #[test]
    fn identity_at_depth_zero() {
        assert_eq!(gen_synthetic(3, 0), "fun f0 x0 = x0\n");
    }

    #[test]
    fn nested_shape() {
        let s = gen_synthetic(3, 2);
        assert!(s.contains("let g1 =\n            fun f0 x0 = x0\n        in fun f1"), "{s}");
        assert!(s.contains("h1::(g1 (g1 (g1 (f1 t1))))"), "{s}");
        assert!(s.contains("h2::(g2 (g2 (g2 (f2 t2))))"), "{s}");
    }

    #[test]
    fn synthetic_programs_are_identities() {
        let input = Value::bools(&[true, false, true]);
        for c in 0..=3 {
            for l in 0..=3 {
                let p = synthetic_program(c, l);
                let loaded = load(&p, 1_000_000).unwrap();
                let (v, _) = loaded.call(synthetic_entry(l), input.clone(), 1_000_000).unwrap();
                assert_eq!(v, input, "c={c} l={l}");
            }
        }
    }

    #[test]
    fn bound_values() {
        assert_eq!(classic_bound(1, 1, 0), BigUint::from(1u32));
        assert_eq!(classic_bound(3, 3, 4), BigUint::from(3u32 * 243 * 55));
    }
}
