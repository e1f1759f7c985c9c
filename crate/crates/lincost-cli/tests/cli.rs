use std::path::PathBuf;
use std::process::{Command, Output};

fn corpus(f: &str) -> String {
    let mut p = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    p.push("../../corpus");
    p.push(f);
    p.to_string_lossy().into_owned()
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lincost")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn analyze_half_reports_an_inferred_matrix() {
    let o = run(&["analyze", &corpus("half.lc"), "--basis", "poly", "--degree", "2", "--algo", "new"]);
    assert_eq!(o.status.code(), Some(0));
    let j: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let half = &j["new"][0];
    assert_eq!(half["name"], "half");
    assert_eq!(half["status"], "Inferred");
    assert!(half["matrix"]["entries"].as_array().unwrap().iter().any(|e| e[0] == "r.deg2" && e[1] == "a.deg2" && e[2] == "4"));
}

#[test]
fn check_accepts_the_reference_matrices() {
    let o = run(&["check", &corpus("half.lc"), "--fn", "half", "--matrix", &corpus("half_poly2.json")]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let o = run(&["check", &corpus("half.lc"), "--fn", "half", "--matrix", &corpus("half_exp4.json")]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
}

#[test]
fn check_rejects_a_raised_entry() {
    let dir = tempfile::tempdir().unwrap();
    let m = dir.path().join("m.json");
    let raised = std::fs::read_to_string(corpus("half_poly2.json")).unwrap().replace("\"a.deg2\", 4]", "\"a.deg2\", 5]");
    std::fs::write(&m, raised).unwrap();
    let o = run(&["check", &corpus("half.lc"), "--fn", "half", "--matrix", m.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("Rejected"));
}

#[test]
fn eval_prints_the_result() {
    let o = run(&["eval", &corpus("merge_sort.lc"), "--input", "[true, false, true]"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("[false, true, true]\n"), "{}", stdout(&o));
}

#[test]
fn bench_writes_eight_cells_per_algorithm() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("grid.csv");
    let o = run(&["bench", "--grid", "1..2,0..1,0..1", "--timeout", "30", "--quiet", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let text = std::fs::read_to_string(out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "d,c,l,algo,constr_secs,solve_secs,total_secs,constrs,status");
    assert_eq!(lines.iter().filter(|l| l.contains(",new,")).count(), 8);
    assert_eq!(lines.iter().filter(|l| l.contains(",classic,")).count(), 8);
}

#[test]
fn export_lp_is_stable() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.lp");
    let b = dir.path().join("b.lp");
    for f in [&a, &b] {
        let o = run(&["export-lp", &corpus("half.lc"), "--fn", "half", "--out", f.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0));
    }
    let text = std::fs::read_to_string(&a).unwrap();
    assert!(text.starts_with("Maximize\n"));
    assert_eq!(text, std::fs::read_to_string(&b).unwrap());
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(run(&["analyze"]).status.code(), Some(2));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(run(&["bench", "--grid", "1..2"]).status.code(), Some(2));
    assert_eq!(run(&["analyze", "/nonexistent/x.lc"]).status.code(), Some(2));
}

#[test]
fn strict_fails_on_nonlinear_programs() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("ff.lc");
    std::fs::write(&f, "fun f x = case x of [] -> [] | h::t -> f (f t)\n").unwrap();
    let path = f.to_str().unwrap();
    assert_eq!(run(&["analyze", path, "--degree", "1"]).status.code(), Some(0));
    assert_eq!(run(&["analyze", path, "--degree", "1", "--strict"]).status.code(), Some(1));
}
