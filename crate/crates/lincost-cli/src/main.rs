use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value as Json};

use lincost::classic::{classic_infer, ClassicConfig, Mode, Pins};
use lincost::driver::{run_grid_with, write_csv, Algo, BasisKind, BenchConfig};
use lincost::lang::{load, parse_program, parse_value, Program, DEFAULT_STEP_BUDGET};
use lincost::linmap::PMat;
use lincost::lp::{export_lp, Status};
use lincost::mapinfer::{Analysis, FunReport, InferConfig};
use lincost::potential::Basis;

#[derive(Parser)]
#[command(name = "lincost", version, about = "Cost-free typing of list programs by linear potential maps")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Infer a matrix for every function of a program.
    Analyze(AnalyzeArgs),
    /// Check a given matrix against one function.
    Check(CheckArgs),
    /// Run a function on a literal input.
    Eval(EvalArgs),
    /// Run the synthetic scaling grid and write CSV.
    Bench(BenchArgs),
    /// Write the inference LP of one function in CPLEX LP format.
    ExportLp(ExportArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum BasisOpt {
    Poly,
    Exp,
}

#[derive(Args, Clone)]
struct BasisArgs {
    #[arg(long, value_enum, default_value = "poly")]
    basis: BasisOpt,
    /// Maximal polynomial degree.
    #[arg(long, default_value_t = 2)]
    degree: u32,
    /// Maximal exponential base.
    #[arg(long, default_value_t = 4)]
    base: u32,
}

impl BasisArgs {
    fn basis(&self) -> Result<Basis, Failure> {
        match self.basis {
            BasisOpt::Poly if self.degree >= 1 => Ok(Basis::poly(self.degree)),
            BasisOpt::Exp if self.base >= 2 => Ok(Basis::exp(self.base)),
            BasisOpt::Poly => Err(Failure::usage("--degree must be at least 1")),
            BasisOpt::Exp => Err(Failure::usage("--base must be at least 2")),
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum AlgoOpt {
    New,
    Classic,
    Both,
}

impl AlgoOpt {
    fn algos(self) -> Vec<Algo> {
        match self {
            AlgoOpt::New => vec![Algo::New],
            AlgoOpt::Classic => vec![Algo::Classic],
            AlgoOpt::Both => vec![Algo::New, Algo::Classic],
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Args)]
struct AnalyzeArgs {
    file: PathBuf,
    #[command(flatten)]
    basis: BasisArgs,
    #[arg(long, value_enum, default_value = "new")]
    algo: AlgoOpt,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    /// Only report this function.
    #[arg(long = "fn")]
    fun: Option<String>,
    /// Exit with status 1 unless every function is typed successfully.
    #[arg(long)]
    strict: bool,
}

#[derive(Args)]
struct CheckArgs {
    file: PathBuf,
    #[arg(long = "fn")]
    fun: String,
    /// Matrix JSON with `rows`, `cols` and `[row, col, value]` entries.
    #[arg(long)]
    matrix: PathBuf,
    /// Basis, when the matrix file does not name one.
    #[arg(long, value_enum)]
    basis: Option<BasisOpt>,
    #[arg(long)]
    degree: Option<u32>,
}

#[derive(Args)]
struct EvalArgs {
    file: PathBuf,
    /// Argument literal, e.g. `[true, false]`.
    #[arg(long)]
    input: String,
    /// Function to call; defaults to the last top-level function.
    #[arg(long = "fn")]
    fun: Option<String>,
    #[arg(long, default_value_t = DEFAULT_STEP_BUDGET)]
    steps: u64,
}

#[derive(Args)]
struct BenchArgs {
    /// `dLO..dHI,cLO..cHI,lLO..lHI`
    #[arg(long, default_value = "1..4,0..4,0..4")]
    grid: String,
    /// Per-cell budget in seconds.
    #[arg(long, default_value_t = 120.0)]
    timeout: f64,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "both")]
    algo: AlgoOpt,
    #[arg(long, value_enum, default_value = "poly")]
    basis: BasisOpt,
    /// Classic systems above this many constraints are counted but not solved.
    #[arg(long, default_value_t = 4000)]
    solve_limit: usize,
    #[arg(long)]
    quiet: bool,
}

#[derive(Args)]
struct ExportArgs {
    file: PathBuf,
    #[arg(long = "fn")]
    fun: String,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    basis: BasisArgs,
}

struct Failure {
    code: u8,
    msg: String,
}

impl Failure {
    fn usage(msg: impl Into<String>) -> Failure {
        Failure { code: 2, msg: msg.into() }
    }

    fn analysis(msg: impl Into<String>) -> Failure {
        Failure { code: 1, msg: msg.into() }
    }
}

type Outcome = Result<u8, Failure>;

fn read_program(path: &Path) -> Result<Program, Failure> {
    let src = fs::read_to_string(path).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
    parse_program(&src).map_err(|e| Failure::usage(format!("{}:{e}", path.display())))
}

fn print_json(j: &Json) {
    let _ = writeln!(std::io::stdout().lock(), "{}", serde_json::to_string_pretty(j).expect("json"));
}

fn top_level_functions(an: &Analysis) -> Vec<String> {
    an.units.units.iter().filter(|u| u.top_level).map(|u| u.name.to_string()).collect()
}

fn text_report(r: &FunReport) -> String {
    let mut out = format!("{}: {} ({} constraints)\n", r.name, r.status, r.constraints);
    let cols: Vec<String> = r.cols.iter().map(|c| c.to_string()).collect();
    let m = r.matrix();
    let width = m.iter().flatten().map(|s| s.to_string().len()).chain(cols.iter().map(String::len)).max().unwrap_or(1);
    let label = r.rows.iter().map(|i| i.to_string().len()).max().unwrap_or(1);
    out.push_str(&format!("  {:label$}", ""));
    for c in &cols {
        out.push_str(&format!(" {c:>width$}"));
    }
    out.push('\n');
    for (i, row) in r.rows.iter().zip(&m) {
        out.push_str(&format!("  {:label$}", i.to_string()));
        for s in row {
            out.push_str(&format!(" {:>width$}", s.to_string()));
        }
        out.push('\n');
    }
    for d in &r.diagnostics {
        out.push_str(&format!("  note: {d}\n"));
    }
    for f in &r.failures {
        out.push_str(&format!("  failed: {f}\n"));
    }
    out
}

fn analyze(a: AnalyzeArgs) -> Outcome {
    let p = read_program(&a.file)?;
    let basis = a.basis.basis()?;
    let an = Analysis::new(&p).map_err(|e| Failure::analysis(e.to_string()))?;
    let names = match &a.fun {
        Some(f) => vec![f.clone()],
        None => top_level_functions(&an),
    };
    let mut ok = true;
    let mut out = json!({ "file": a.file.display().to_string(), "basis": basis.to_string() });
    let mut text = String::new();
    if a.algo != AlgoOpt::Classic {
        let cfg = InferConfig::new(basis);
        let reports = match &a.fun {
            Some(f) => {
                let r = an.infer_function(f, &cfg).map_err(|e| Failure::analysis(e.to_string()))?;
                vec![r]
            }
            None => an.infer_all(&cfg).map_err(|e| Failure::analysis(e.to_string()))?.into_values().collect(),
        };
        ok &= reports.iter().all(|r| r.status.is_success());
        out["new"] = reports.iter().map(FunReport::to_json).collect();
        for r in &reports {
            text.push_str(&text_report(r));
        }
    }
    if a.algo != AlgoOpt::New {
        let cfg = ClassicConfig::new(basis, Mode::CostFree);
        let mut rows = Vec::new();
        for f in &names {
            match classic_infer(&p, f, &cfg, &Pins::default()) {
                Ok(r) => {
                    ok &= r.status == Some(Status::Optimal);
                    text.push_str(&format!("{f} (classic): {} ({} constraints)\n", r.status_name(), r.constraints));
                    for (i, q) in &r.arg {
                        text.push_str(&format!("  arg {i} = {q}\n"));
                    }
                    for (i, q) in &r.ret {
                        text.push_str(&format!("  ret {i} = {q}\n"));
                    }
                    rows.push(r.to_json());
                }
                Err(e) => {
                    ok = false;
                    text.push_str(&format!("{f} (classic): error: {e}\n"));
                    rows.push(json!({ "algo": "classic", "name": f, "status": "error", "error": e.to_string() }));
                }
            }
        }
        out["classic"] = Json::Array(rows);
    }
    match a.format {
        Format::Json => print_json(&out),
        Format::Text => print!("{text}"),
    }
    Ok(if a.strict && !ok { 1 } else { 0 })
}

fn check(a: CheckArgs) -> Outcome {
    let p = read_program(&a.file)?;
    let raw = fs::read_to_string(&a.matrix).map_err(|e| Failure::usage(format!("{}: {e}", a.matrix.display())))?;
    let j: Json = serde_json::from_str(&raw).map_err(|e| Failure::usage(format!("{}: {e}", a.matrix.display())))?;
    let (mat, _, _) = PMat::from_json(&j).map_err(|e| Failure::usage(format!("{}: {e}", a.matrix.display())))?;
    let kind = match (a.basis, j.get("basis").and_then(Json::as_str)) {
        (Some(b), _) => b,
        (None, Some("exp")) => BasisOpt::Exp,
        (None, Some("poly")) | (None, None) => BasisOpt::Poly,
        (None, Some(other)) => return Err(Failure::usage(format!("unknown basis `{other}` in matrix file"))),
    };
    let degree = a.degree.or_else(|| j.get("degree").and_then(Json::as_u64).map(|d| d as u32)).unwrap_or(2);
    let basis = BasisArgs { basis: kind, degree, base: degree }.basis()?;
    let an = Analysis::new(&p).map_err(|e| Failure::analysis(e.to_string()))?;
    let r = an.check_function(&a.fun, &mat, &InferConfig::new(basis)).map_err(|e| Failure::analysis(e.to_string()))?;
    print_json(&r.to_json());
    Ok(if r.status.is_success() { 0 } else { 1 })
}

fn eval(a: EvalArgs) -> Outcome {
    let p = read_program(&a.file)?;
    let input = parse_value(&a.input).map_err(|e| Failure::usage(format!("--input: {e}")))?;
    let f = match a.fun {
        Some(f) => f,
        None => p
            .defs()
            .filter(|(_, e)| matches!(e, lincost::lang::Expr::Fun(..)))
            .last()
            .map(|(n, _)| n.to_string())
            .ok_or_else(|| Failure::usage("the program defines no function"))?,
    };
    let loaded = load(&p, a.steps).map_err(|e| Failure::analysis(e.to_string()))?;
    let (v, cost) = loaded.call(&f, input, a.steps).map_err(|e| Failure::analysis(e.to_string()))?;
    println!("{v}");
    println!("cost {cost}");
    Ok(0)
}

fn parse_range(s: &str) -> Option<(usize, usize)> {
    let (a, b) = s.trim().split_once("..")?;
    Some((a.trim().parse().ok()?, b.trim().parse().ok()?))
}

fn parse_grid(s: &str) -> Option<[(usize, usize); 3]> {
    let parts: Vec<&str> = s.split(',').collect();
    match parts.as_slice() {
        [d, c, l] => Some([parse_range(d)?, parse_range(c)?, parse_range(l)?]),
        _ => None,
    }
}

fn bench(a: BenchArgs) -> Outcome {
    let [d, c, l] = parse_grid(&a.grid).ok_or_else(|| Failure::usage(format!("bad --grid `{}`", a.grid)))?;
    if !(a.timeout.is_finite() && a.timeout > 0.0) {
        return Err(Failure::usage("--timeout must be positive"));
    }
    let mut cfg = BenchConfig::new((d.0 as u32, d.1 as u32), c, l);
    cfg.basis = match a.basis {
        BasisOpt::Poly => BasisKind::Poly,
        BasisOpt::Exp => BasisKind::Exp,
    };
    cfg.algos = a.algo.algos();
    cfg.timeout = Duration::from_secs_f64(a.timeout);
    cfg.classic_solve_limit = a.solve_limit;
    cfg.validate().map_err(Failure::usage)?;
    let quiet = a.quiet;
    let rows = run_grid_with(&cfg, |r| {
        if !quiet {
            let n = r.constrs.map_or_else(|| "-".to_string(), |n| n.to_string());
            eprintln!("d={} c={} l={} {:<7} {:>9} {} {:.3}s", r.d, r.c, r.l, r.algo, n, r.status, r.total_secs);
        }
    })
    .map_err(Failure::usage)?;
    let res = match &a.out {
        Some(path) => {
            let f = fs::File::create(path).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
            write_csv(&rows, f)
        }
        None => write_csv(&rows, std::io::stdout()),
    };
    res.map_err(|e| Failure::analysis(e.to_string()))?;
    Ok(0)
}

fn export(a: ExportArgs) -> Outcome {
    let p = read_program(&a.file)?;
    let basis = a.basis.basis()?;
    let an = Analysis::new(&p).map_err(|e| Failure::analysis(e.to_string()))?;
    let r = an.infer_function(&a.fun, &InferConfig::new(basis)).map_err(|e| Failure::analysis(e.to_string()))?;
    let lp = r.lp.ok_or_else(|| Failure::analysis(format!("`{}` produced no LP (status {})", a.fun, r.status)))?;
    fs::write(&a.out, export_lp(&lp)).map_err(|e| Failure::usage(format!("{}: {e}", a.out.display())))?;
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match cli.cmd {
        Cmd::Analyze(a) => analyze(a),
        Cmd::Check(a) => check(a),
        Cmd::Eval(a) => eval(a),
        Cmd::Bench(a) => bench(a),
        Cmd::ExportLp(a) => export(a),
    };
    match res {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}
