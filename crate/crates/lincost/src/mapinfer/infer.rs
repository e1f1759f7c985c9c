use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;
use std::time::Instant;

use num_bigint::BigInt;
use num_traits::{Pow, Zero};
use serde_json::{json, Value as Json};

use crate::lang::{normalize_program, typecheck_program, Name, Program, Ty, TypeError, Typing};
use crate::linmap::{PMat, Scalar};
use crate::lp::{solve_with, LPProblem, LinExpr, SolveOptions, Status, VarId};
use crate::potential::{indices_at, Basis, Index, Leaf, Seg};
use crate::Rational;

use super::constraints::{fun_constraints, FunConstraints};
use super::derive::{Ctx, DeriveError, Deriver, FunSig};
use super::ho::expand_higher_order;
use super::units::{collect_units, Units};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize)]
pub enum FunStatus {
    /// A given matrix satisfies every constraint.
    Checked,
    /// The LP found a matrix, and the matrix passes the checker.
    Inferred,
    Infeasible,
    /// The constraints multiply unknowns.
    Nonlinear,
    /// A given matrix violates a constraint.
    Rejected,
    /// The LP hit its deadline.
    Timeout,
}

impl FunStatus {
    pub fn is_success(&self) -> bool {
        matches!(self, FunStatus::Checked | FunStatus::Inferred)
    }
}

impl fmt::Display for FunStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// Objective of the inference LP.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Objective {
    /// Maximize `Σ 10^(rank row + rank col) · M[row, col]`, where a degree `k`
    /// ranks `k`, a base `b` ranks `b - 1` and the constant ranks 0.
    #[default]
    DegreeWeighted,
    /// Any feasible matrix.
    Feasibility,
}

#[derive(Clone, Debug)]
pub struct InferConfig {
    pub basis: Basis,
    pub objective: Objective,
    pub deadline: Option<Instant>,
}

impl InferConfig {
    pub fn new(basis: Basis) -> InferConfig {
        InferConfig { basis, objective: Objective::default(), deadline: None }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, serde::Serialize)]
pub struct LpStats {
    pub vars: usize,
    pub constraints: usize,
    pub solve_state: String,
}

#[derive(Clone, Debug)]
pub struct FunReport {
    pub name: String,
    pub status: FunStatus,
    /// The checked or inferred signature; the zero-reallocation fallback otherwise.
    pub sig: FunSig,
    pub rows: Vec<Index>,
    pub cols: Vec<Index>,
    pub constraints: usize,
    pub linear: bool,
    pub diagnostics: Vec<String>,
    pub failures: Vec<String>,
    pub lp_stats: Option<LpStats>,
    /// The inference LP, shared by the members of a recursive group.
    pub lp: Option<Arc<LPProblem>>,
    pub gen_secs: f64,
    pub solve_secs: f64,
}

impl FunReport {
    pub fn matrix(&self) -> Vec<Vec<Scalar>> {
        self.sig.mat.view(&self.rows, &self.cols)
    }

    pub fn to_json(&self) -> Json {
        json!({
            "name": self.name,
            "status": self.status,
            "matrix": self.sig.mat.to_json(&self.rows, &self.cols),
            "constraints": self.constraints,
            "linear": self.linear,
            "lp_stats": self.lp_stats,
            "diagnostics": self.diagnostics,
            "failures": self.failures,
            "gen_secs": self.gen_secs,
            "solve_secs": self.solve_secs,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum AnalysisError {
    #[error("type error: {0}")]
    Type(#[from] TypeError),
    #[error("unsupported higher-order call: `{var}` in `{fun}` has no static definition")]
    HigherOrder { fun: Name, var: Name },
    #[error("no function named `{0}`")]
    UnknownFunction(String),
    #[error("in `{fun}`: {err}")]
    Derive { fun: Name, err: DeriveError },
}

/// A normalized, typechecked program with its function units.
#[derive(Clone, Debug)]
pub struct Analysis {
    pub program: Program,
    pub typing: Typing,
    pub units: Units,
}

fn rank(i: &Index) -> u32 {
    match i.leaf {
        Leaf::Deg(k) => k,
        Leaf::Base(b) => b - 1,
        Leaf::Const => 0,
    }
}

fn weight(row: &Index, col: &Index) -> Rational {
    Rational::from_integer(Pow::pow(BigInt::from(10), rank(row) + rank(col)))
}

struct Member {
    unit: usize,
    name: Name,
    symbolic: bool,
    /// LP variable of each unknown entry.
    unknowns: Vec<(Index, Index, VarId)>,
    cons: FunConstraints,
    ret_rows: Vec<Index>,
}

impl Analysis {
    pub fn new(p: &Program) -> Result<Analysis, AnalysisError> {
        let program = normalize_program(&expand_higher_order(p)?);
        let typing = typecheck_program(&program)?;
        let units = collect_units(&program);
        Ok(Analysis { program, typing, units })
    }

    fn fun_types(&self, f: &Name) -> Result<(Ty, Ty), AnalysisError> {
        match self.typing.of(f) {
            Some(Ty::Fun(a, r)) => Ok(((**a).clone(), (**r).clone())),
            _ => Err(AnalysisError::UnknownFunction(f.to_string())),
        }
    }

    /// Units reachable from `targets`, callees included.
    fn reachable(&self, targets: &[usize]) -> BTreeSet<usize> {
        let mut seen = BTreeSet::new();
        let mut stack = targets.to_vec();
        while let Some(u) = stack.pop() {
            if seen.insert(u) {
                stack.extend(self.units.calls[u].iter().copied());
            }
        }
        seen
    }

    fn unit_index(&self, f: &str) -> Result<usize, AnalysisError> {
        let target = self.units.resolve.get(f).map(|n| n.to_string()).unwrap_or_else(|| f.to_string());
        self.units.index.get(target.as_str()).copied().ok_or_else(|| AnalysisError::UnknownFunction(f.to_string()))
    }

    /// Infers every function of the program.
    pub fn infer_all(&self, cfg: &InferConfig) -> Result<BTreeMap<String, FunReport>, AnalysisError> {
        let all: Vec<usize> = (0..self.units.units.len()).collect();
        self.run(&all, &HashMap::new(), cfg)
    }

    /// Infers `f` and whatever it calls.
    pub fn infer_function(&self, f: &str, cfg: &InferConfig) -> Result<FunReport, AnalysisError> {
        let u = self.unit_index(f)?;
        let mut reports = self.run(&[u], &HashMap::new(), cfg)?;
        Ok(reports.remove(&*self.units.units[u].name).expect("target is analyzed"))
    }

    /// Checks `mat` (over `r.* ∪ c` rows, `a.* ∪ c` columns) as the matrix of `f`.
    pub fn check_function(&self, f: &str, mat: &PMat, cfg: &InferConfig) -> Result<FunReport, AnalysisError> {
        let u = self.unit_index(f)?;
        let name = self.units.units[u].name.clone();
        let (arg, ret) = self.fun_types(&name)?;
        let mut sig = FunSig { arg, ret, mat: PMat::identity() };
        let (rows, cols) = (sig.rows(cfg.basis), sig.cols(cfg.basis));
        sig.mat = PMat::from_dense(&rows, &cols, &mat.view(&rows, &cols));
        let fixed = HashMap::from([(name.clone(), sig)]);
        let mut reports = self.run(&[u], &fixed, cfg)?;
        Ok(reports.remove(&*name).expect("target is analyzed"))
    }

    fn run(
        &self,
        targets: &[usize],
        fixed: &HashMap<Name, FunSig>,
        cfg: &InferConfig,
    ) -> Result<BTreeMap<String, FunReport>, AnalysisError> {
        let needed = self.reachable(targets);
        if let Some((fun, var)) = self
            .units
            .unresolved
            .iter()
            .find(|(f, _)| needed.iter().any(|&u| self.units.units[u].name == *f))
        {
            return Err(AnalysisError::HigherOrder { fun: fun.clone(), var: var.clone() });
        }
        let mut sigs: HashMap<Name, FunSig> = HashMap::new();
        let mut reports = BTreeMap::new();
        for scc in self.units.sccs() {
            if !scc.iter().any(|u| needed.contains(u)) {
                continue;
            }
            for r in self.scc(&scc, fixed, &mut sigs, cfg)? {
                reports.insert(r.name.clone(), r);
            }
        }
        Ok(reports)
    }

    fn scc(
        &self,
        scc: &[usize],
        fixed: &HashMap<Name, FunSig>,
        sigs: &mut HashMap<Name, FunSig>,
        cfg: &InferConfig,
    ) -> Result<Vec<FunReport>, AnalysisError> {
        let basis = cfg.basis;
        let t0 = Instant::now();
        let mut lp = LPProblem::new();
        let mut members = Vec::new();
        for &u in scc {
            let name = self.units.units[u].name.clone();
            let (arg, ret) = self.fun_types(&name)?;
            let shape = FunSig { arg: arg.clone(), ret: ret.clone(), mat: PMat::identity() };
            let (rows, cols) = (shape.rows(basis), shape.cols(basis));
            let mut unknowns = Vec::new();
            let sig = match fixed.get(&name) {
                Some(s) => s.clone(),
                None => {
                    let dense: Vec<Vec<Scalar>> = rows
                        .iter()
                        .map(|i| {
                            cols.iter()
                                .map(|j| match (i.is_const(), j.is_const()) {
                                    (true, true) => Scalar::one(),
                                    (false, true) => Scalar::zero(),
                                    _ => {
                                        let v = lp.add_var(format!("{name}:{i}<-{j}"), false);
                                        unknowns.push((i.clone(), j.clone(), v));
                                        Scalar::unknown(v)
                                    }
                                })
                                .collect()
                        })
                        .collect();
                    FunSig::from_dense(arg, ret, basis, &dense)
                }
            };
            sigs.insert(name.clone(), sig);
            let symbolic = !fixed.contains_key(&name);
            members.push(Member { unit: u, name, symbolic, unknowns, cons: FunConstraints::default(), ret_rows: rows });
        }
        let mut nonlinear: Option<String> = None;
        for m in members.iter_mut() {
            match self.unit_constraints(m.unit, sigs, basis) {
                Ok(c) => m.cons = c,
                Err(DeriveError::Nonlinear(t)) => {
                    nonlinear = Some(format!("in `{}`: {t}", m.name));
                    break;
                }
                Err(err) => return Err(AnalysisError::Derive { fun: m.name.clone(), err }),
            }
        }
        let gen_secs = t0.elapsed().as_secs_f64();
        let report = |m: &Member, status: FunStatus, sig: FunSig| FunReport {
            name: m.name.to_string(),
            status,
            rows: m.ret_rows.clone(),
            cols: sig.cols(basis),
            sig,
            constraints: m.cons.len(),
            linear: true,
            diagnostics: m
                .cons
                .havoc_left
                .iter()
                .map(|(f, i, j)| format!("havoc on the bounded side at ({i}, {j}) in the {f} family"))
                .collect(),
            failures: Vec::new(),
            lp_stats: None,
            lp: None,
            gen_secs,
            solve_secs: 0.0,
        };

        if let Some(diag) = nonlinear {
            let mut out = Vec::new();
            for m in &members {
                let sig = if m.symbolic {
                    let s = &sigs[&m.name];
                    FunSig::zero_realloc(s.arg.clone(), s.ret.clone(), basis)
                } else {
                    sigs[&m.name].clone()
                };
                sigs.insert(m.name.clone(), sig.clone());
                let mut r = report(m, FunStatus::Nonlinear, sig);
                r.linear = false;
                r.diagnostics.push(format!("nonlinear constraint {diag}; falling back to zero reallocation"));
                out.push(r);
            }
            return Ok(out);
        }

        let failing = |m: &Member, x: &dyn Fn(VarId) -> Rational| -> Vec<String> {
            let mut f: Vec<String> = m
                .cons
                .ineqs
                .iter()
                .filter(|t| t.ineq.lhs.eval(x) > t.ineq.rhs.eval(x))
                .map(|t| t.to_string())
                .collect();
            f.extend(m.cons.havoc_left.iter().map(|(fam, i, j)| format!("{fam} at ({i}, {j}): havoc is not bounded")));
            f
        };

        if members.iter().all(|m| !m.symbolic) {
            let zero = |_: VarId| Rational::zero();
            return Ok(members
                .iter()
                .map(|m| {
                    let failures = failing(m, &zero);
                    let status = if failures.is_empty() { FunStatus::Checked } else { FunStatus::Rejected };
                    let mut r = report(m, status, sigs[&m.name].clone());
                    r.failures = failures;
                    r
                })
                .collect());
        }

        // Unknowns never bounded by a constraint are fixed at zero.
        let mut used: BTreeSet<VarId> = BTreeSet::new();
        let mut const_fail = false;
        for m in &members {
            for t in &m.cons.ineqs {
                let e = t.ineq.lhs.clone() - t.ineq.rhs.clone();
                if e.is_constant() {
                    const_fail |= e.constant > Rational::zero();
                    continue;
                }
                used.extend(e.vars());
                lp.le(t.ineq.lhs.clone(), t.ineq.rhs.clone());
            }
        }
        let mut objective = LinExpr::zero();
        let mut diagnostics = Vec::new();
        for m in &members {
            for (i, j, v) in &m.unknowns {
                if !used.contains(v) {
                    lp.equal(LinExpr::var(*v), LinExpr::zero());
                    diagnostics.push(format!("`{}` entry ({i}, {j}) is unconstrained; fixed at 0", m.name));
                } else if cfg.objective == Objective::DegreeWeighted {
                    objective.add_term(*v, weight(i, j));
                }
            }
        }
        lp.maximize(objective);
        let t1 = Instant::now();
        let mut sol = if const_fail {
            None
        } else {
            Some(solve_with(&lp, &SolveOptions { deadline: cfg.deadline }))
        };
        if sol.as_ref().is_some_and(|s| s.status == Status::Unbounded) {
            diagnostics.push("objective unbounded; unknowns capped at 0".into());
            for m in &members {
                for (_, _, v) in &m.unknowns {
                    lp.le(LinExpr::var(*v), LinExpr::zero());
                }
            }
            sol = Some(solve_with(&lp, &SolveOptions { deadline: cfg.deadline }));
        }
        let solve_secs = t1.elapsed().as_secs_f64();
        let state = match &sol {
            None => "infeasible".to_string(),
            Some(s) => s.status.to_string(),
        };
        let stats = LpStats { vars: lp.vars.len(), constraints: lp.len(), solve_state: state };
        let lp = Arc::new(lp);
        let mut out = Vec::new();
        match sol.filter(|s| s.is_optimal()) {
            Some(s) => {
                let x = |v: VarId| s.value(v);
                for m in &members {
                    let sig = sigs[&m.name].clone();
                    let concrete = FunSig { arg: sig.arg.clone(), ret: sig.ret.clone(), mat: sig.mat.subst(&x) };
                    sigs.insert(m.name.clone(), concrete.clone());
                    let failures = failing(m, &x);
                    let status = match (failures.is_empty(), m.symbolic) {
                        (true, true) => FunStatus::Inferred,
                        (true, false) => FunStatus::Checked,
                        (false, _) => FunStatus::Rejected,
                    };
                    let mut r = report(m, status, concrete);
                    r.failures = failures;
                    r.diagnostics.extend(diagnostics.iter().cloned());
                    r.lp_stats = Some(stats.clone());
                    r.lp = Some(lp.clone());
                    r.solve_secs = solve_secs;
                    out.push(r);
                }
            }
            None => {
                let status =
                    if stats.solve_state == "timeout" { FunStatus::Timeout } else { FunStatus::Infeasible };
                for m in &members {
                    let s = sigs[&m.name].clone();
                    let sig = if m.symbolic { FunSig::zero_realloc(s.arg, s.ret, basis) } else { s };
                    sigs.insert(m.name.clone(), sig.clone());
                    let mut r = report(m, status, sig);
                    r.diagnostics.extend(diagnostics.iter().cloned());
                    r.diagnostics.push(format!("LP {}; falling back to zero reallocation", stats.solve_state));
                    r.lp_stats = Some(stats.clone());
                    r.lp = Some(lp.clone());
                    r.solve_secs = solve_secs;
                    out.push(r);
                }
            }
        }
        Ok(out)
    }

    /// Typing context of a unit body: captured variables, the function itself and its argument.
    pub fn unit_context(&self, u: usize, sigs: &HashMap<Name, FunSig>, basis: Basis) -> Result<(Ctx, Vec<Index>), DeriveError> {
        let unit = &self.units.units[u];
        let d = self.deriver(sigs, basis);
        let mut ctx = Ctx::new();
        let mut gamma = Vec::new();
        for y in &unit.captured {
            let t = d.binder_type(y)?;
            gamma.extend(indices_at(&[Seg::Var(y.clone())], &t.ty(), basis));
            ctx.insert(y.clone(), t);
        }
        ctx.insert(unit.name.clone(), d.binder_type(&unit.name)?);
        ctx.insert(unit.arg.clone(), d.binder_type(&unit.arg)?);
        Ok((ctx, gamma))
    }

    pub fn deriver<'a>(&'a self, sigs: &'a HashMap<Name, FunSig>, basis: Basis) -> Deriver<'a> {
        Deriver { basis, typing: &self.typing, sigs, resolve: &self.units.resolve }
    }

    fn unit_constraints(&self, u: usize, sigs: &HashMap<Name, FunSig>, basis: Basis) -> Result<FunConstraints, DeriveError> {
        let unit = &self.units.units[u];
        let (ctx, gamma) = self.unit_context(u, sigs, basis)?;
        let r = self.deriver(sigs, basis).derive(&ctx, &unit.body)?;
        Ok(fun_constraints(&unit.arg, &sigs[&unit.name], &r.s, &r.c, &gamma, basis)?)
    }
}

/// Infers matrices for every function, callees first.
pub fn infer_program(p: &Program, cfg: &InferConfig) -> Result<BTreeMap<String, FunReport>, AnalysisError> {
    Analysis::new(p)?.infer_all(cfg)
}

pub fn infer_function(p: &Program, f: &str, cfg: &InferConfig) -> Result<FunReport, AnalysisError> {
    Analysis::new(p)?.infer_function(f, cfg)
}

pub fn check_function(p: &Program, f: &str, mat: &PMat, basis: Basis) -> Result<FunReport, AnalysisError> {
    Analysis::new(p)?.check_function(f, mat, &InferConfig::new(basis))
}

/// Whether `Φ(input) ≥ Φ(output)` under `sig`, for argument annotation `p` over `a.* ∪ c`.
pub fn conserves(
    sig: &FunSig,
    input: &crate::lang::Value,
    output: &crate::lang::Value,
    p: &crate::potential::AnnVec,
    basis: Basis,
) -> bool {
    use crate::potential::{potential_at, AnnVec};
    let q = match sig.mat.apply(p) {
        Some(q) => q,
        None => return false,
    };
    let mut out = AnnVec::new();
    for i in sig.rows(basis) {
        match q.get(&i) {
            Some(Scalar::Rat(x)) => out.set(i, x.clone()),
            Some(Scalar::Havoc) => return false,
            _ => {}
        }
    }
    let c = Index::constant();
    let phi_in = potential_at(input, &sig.arg, &[Seg::Arg], p, basis) + p.get(&c);
    let phi_out = potential_at(output, &sig.ret, &[Seg::Ret], &out, basis) + out.get(&c);
    phi_in >= phi_out
}
