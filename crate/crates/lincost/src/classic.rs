//! Classic AARA: annotated list types, sharing by splitting, and cost-free
//! retyping at every call site.
//!
//! Every list annotation is a fresh non-negative LP variable. A function is
//! typed once per definition; each call to an already typed function retypes
//! its body cost-free for the excess potential at that call. At a recursive
//! call of a typing with annotation width `w > 1` the call annotation is the
//! signature plus a cost-free typing of width `w - 1`; at width 1 it is the
//! signature itself, up to constant potential.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::time::Instant;

use num_bigint::BigInt;
use num_traits::{One, Pow, Zero};
use serde_json::{json, Value as Json};

use crate::lang::{Expr, Name, Ty};
use crate::lp::{solve_with, LPProblem, LinExpr, Rel, SolveOptions, Status, VarId};
use crate::mapinfer::{expand_higher_order, Analysis, AnalysisError};
use crate::potential::{indices, rational_to_string, Basis, Index, Leaf, Seg};
use crate::Rational;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize)]
pub enum Mode {
    /// Ticks consume potential.
    Costful,
    /// Ticks are ignored.
    CostFree,
}

#[derive(Clone, Debug)]
pub struct ClassicConfig {
    pub basis: Basis,
    pub mode: Mode,
    /// Reuse one cost-free retyping per function and width instead of one per call.
    pub memoize: bool,
    pub deadline: Option<Instant>,
    /// Abort generation beyond this many constraints.
    pub max_constraints: Option<usize>,
    /// Keep at most this many constraints in memory; beyond it only count.
    pub store_limit: usize,
}

impl ClassicConfig {
    pub fn new(basis: Basis, mode: Mode) -> ClassicConfig {
        ClassicConfig { basis, mode, memoize: false, deadline: None, max_constraints: None, store_limit: 200_000 }
    }
}

/// Annotation of a value: one LP variable per index of its type, constant excluded.
pub type Ann = BTreeMap<Index, VarId>;

/// An annotated function type `⟨arg, arg_const⟩ → ⟨ret, ret_const⟩`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AnnSig {
    pub arg: Ann,
    pub arg_const: VarId,
    pub ret: Ann,
    pub ret_const: VarId,
    /// Annotation width: the degree, or the number of bases.
    pub width: usize,
}

#[derive(Debug, thiserror::Error)]
pub enum ClassicError {
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error("in `{fun}`: `{var}` is not a first-order function or datum")]
    HigherOrder { fun: Name, var: Name },
    #[error("constraint budget exhausted after {0} constraints")]
    Budget(usize),
}

/// The generated linear program and the main typing of every function.
#[derive(Clone, Debug)]
pub struct ClassicLp {
    /// Empty when more constraints were generated than the store limit allows.
    pub problem: LPProblem,
    pub stored: bool,
    pub sigs: BTreeMap<String, AnnSig>,
    /// A variable fixed to zero.
    pub zero: VarId,
    pub constraints: usize,
    pub vars: usize,
    pub retypings: usize,
    pub gen_secs: f64,
}

fn basis_at(b: Basis, w: usize) -> Basis {
    match b {
        Basis::Polynomial(_) => Basis::Polynomial(w as u32),
        Basis::Exponential(_) => Basis::Exponential(w as u32 + 1),
    }
}

fn width_of(b: Basis) -> usize {
    b.width()
}

fn rel_indices(t: &Ty, b: Basis) -> Vec<Index> {
    indices(t, b).into_iter().filter(|i| !i.is_const()).collect()
}

struct Frame {
    unit: usize,
    sig: AnnSig,
    mode: Mode,
}

type Ctx = BTreeMap<Name, Ann>;

struct Gen<'a> {
    an: &'a Analysis,
    cfg: &'a ClassicConfig,
    lp: LPProblem,
    storing: bool,
    rows: usize,
    nvars: usize,
    zero: VarId,
    stack: Vec<Frame>,
    memo: HashMap<(usize, usize), AnnSig>,
    main: HashMap<usize, AnnSig>,
    retypings: usize,
}

impl Gen<'_> {
    fn var(&mut self) -> VarId {
        let v = self.nvars;
        self.nvars += 1;
        if self.storing {
            let got = self.lp.add_var(format!("v{v}"), true);
            debug_assert_eq!(got, v);
        }
        v
    }

    fn row(&mut self, lhs: LinExpr, rel: Rel, rhs: LinExpr) -> Result<(), ClassicError> {
        self.rows += 1;
        if self.storing {
            if self.rows > self.cfg.store_limit {
                self.storing = false;
                self.lp = LPProblem::new();
            } else {
                self.lp.add(lhs, rel, rhs);
            }
        }
        if self.cfg.max_constraints.is_some_and(|m| self.rows > m) {
            return Err(ClassicError::Budget(self.rows));
        }
        if self.rows % 4096 == 0 && self.cfg.deadline.is_some_and(|d| Instant::now() >= d) {
            return Err(ClassicError::Budget(self.rows));
        }
        Ok(())
    }

    fn eq(&mut self, lhs: LinExpr, rhs: LinExpr) -> Result<(), ClassicError> {
        self.row(lhs, Rel::Eq, rhs)
    }

    fn ge(&mut self, lhs: LinExpr, rhs: LinExpr) -> Result<(), ClassicError> {
        self.row(lhs, Rel::Ge, rhs)
    }

    fn ann(&mut self, idx: &[Index]) -> Ann {
        idx.iter().map(|i| (i.clone(), self.var())).collect()
    }

    fn at(&self, a: &Ann, i: &Index) -> VarId {
        a.get(i).copied().unwrap_or(self.zero)
    }

    fn width(&self) -> usize {
        self.stack.last().map_or(width_of(self.cfg.basis), |f| f.sig.width)
    }

    fn mode(&self) -> Mode {
        self.stack.last().map_or(self.cfg.mode, |f| f.mode)
    }

    fn unit_name(&self) -> Name {
        self.stack.last().map(|f| self.an.units.units[f.unit].name.clone()).unwrap_or_else(|| crate::lang::name("main"))
    }

    fn ty(&self, x: &Name) -> Ty {
        self.an.typing.of(x).cloned().unwrap_or(Ty::Alpha)
    }

    fn indices_of(&self, t: &Ty) -> Vec<Index> {
        rel_indices(t, basis_at(self.cfg.basis, self.width()))
    }

    /// `a = b + c` with `b, c` fresh.
    fn split(&mut self, a: &Ann) -> Result<(Ann, Ann), ClassicError> {
        let idx: Vec<Index> = a.keys().cloned().collect();
        let b = self.ann(&idx);
        let c = self.ann(&idx);
        for i in &idx {
            self.eq(LinExpr::var(a[i]), LinExpr::var(b[i]) + LinExpr::var(c[i]))?;
        }
        Ok((b, c))
    }

    /// Splits every data variable of `ctx` that occurs in more than one of `parts`.
    fn share(&mut self, ctx: &Ctx, parts: &[BTreeSet<Name>]) -> Result<Vec<Ctx>, ClassicError> {
        let mut out: Vec<Ctx> = vec![Ctx::new(); parts.len()];
        for (x, a) in ctx {
            let users: Vec<usize> = (0..parts.len()).filter(|&k| parts[k].contains(x)).collect();
            match users.len() {
                0 => {}
                1 => {
                    out[users[0]].insert(x.clone(), a.clone());
                }
                _ => {
                    let mut rest = a.clone();
                    for &k in &users[..users.len() - 1] {
                        let (mine, more) = self.split(&rest)?;
                        out[k].insert(x.clone(), mine);
                        rest = more;
                    }
                    out[*users.last().unwrap()].insert(x.clone(), rest);
                }
            }
        }
        Ok(out)
    }

    /// Tail annotation and constant gain of a list annotated `p` at the given root.
    fn shift_terms(&self, p: &Ann, root: &[Seg]) -> (Vec<(Index, LinExpr)>, LinExpr) {
        let w = self.width();
        let leaves = basis_at(self.cfg.basis, w).list_leaves();
        let get = |l: Leaf| LinExpr::var(self.at(p, &Index::new(root.to_vec(), l)));
        let mut tail = Vec::new();
        let gain;
        match self.cfg.basis {
            Basis::Polynomial(_) => {
                for &l in &leaves {
                    let Leaf::Deg(k) = l else { unreachable!() };
                    let mut e = get(l);
                    if (k as usize) < w {
                        e = e + get(Leaf::Deg(k + 1));
                    }
                    tail.push((Index::new(root.to_vec(), l), e));
                }
                gain = get(Leaf::Deg(1));
            }
            Basis::Exponential(_) => {
                for &l in &leaves {
                    let Leaf::Base(b) = l else { unreachable!() };
                    let mut e = get(l).scale(&Rational::from_integer(b.into()));
                    if (b as usize) < w + 1 {
                        e = e + get(Leaf::Base(b + 1));
                    }
                    tail.push((Index::new(root.to_vec(), l), e));
                }
                gain = get(Leaf::Base(2));
            }
        }
        (tail, gain)
    }

    fn data(&self, ctx: &Ctx, x: &Name) -> Result<Ann, ClassicError> {
        match ctx.get(x) {
            Some(a) => Ok(a.clone()),
            None if self.ty(x).contains_fun() => Err(ClassicError::HigherOrder { fun: self.unit_name(), var: x.clone() }),
            None => Ok(Ann::new()),
        }
    }

    /// Componentwise weakening `r ≤ a` and `qr ≤ q` into fresh results.
    fn join(&mut self, branches: &[(Ann, VarId)]) -> Result<(Ann, VarId), ClassicError> {
        let idx: BTreeSet<Index> = branches.iter().flat_map(|(a, _)| a.keys().cloned()).collect();
        let idx: Vec<Index> = idx.into_iter().collect();
        let r = self.ann(&idx);
        let q = self.var();
        for (a, qa) in branches {
            for i in &idx {
                let v = self.at(a, i);
                self.ge(LinExpr::var(v), LinExpr::var(r[i]))?;
            }
            self.ge(LinExpr::var(*qa), LinExpr::var(q))?;
        }
        Ok((r, q))
    }

    fn derive(&mut self, ctx: &Ctx, q: VarId, e: &Expr) -> Result<(Ann, VarId), ClassicError> {
        match e {
            Expr::Bool(_) => Ok((Ann::new(), q)),
            Expr::Nil => {
                let idx = self.indices_of(&Ty::list(Ty::Alpha));
                Ok((self.ann(&idx), q))
            }
            Expr::Var(x) => {
                let a = self.data(ctx, x)?;
                let r = self.ann(&a.keys().cloned().collect::<Vec<_>>());
                for (i, v) in &a {
                    self.eq(LinExpr::var(r[i]), LinExpr::var(*v))?;
                }
                let q2 = self.var();
                self.eq(LinExpr::var(q2), LinExpr::var(q))?;
                Ok((r, q2))
            }
            Expr::Tick(c, body) => {
                if self.mode() == Mode::CostFree {
                    return self.derive(ctx, q, body);
                }
                let q2 = self.var();
                self.eq(LinExpr::var(q), LinExpr::var(q2) + LinExpr::constant(c.clone()))?;
                self.derive(ctx, q2, body)
            }
            Expr::Cons(_, t) => {
                let t = t.as_var().expect("let-normal cons");
                let p = self.data(ctx, t)?;
                let idx = self.indices_of(&self.ty(t));
                let r = self.ann(&idx);
                let (tail, gain) = self.shift_terms(&r, &[]);
                for (i, ex) in tail {
                    let v = self.at(&p, &i);
                    self.eq(LinExpr::var(v), ex)?;
                }
                let q2 = self.var();
                self.eq(LinExpr::var(q), LinExpr::var(q2) + gain)?;
                Ok((r, q2))
            }
            Expr::Pair(a, b) => {
                let (a, b) = (a.as_var().expect("let-normal pair"), b.as_var().expect("let-normal pair"));
                let parts = [BTreeSet::from([a.clone()]), BTreeSet::from([b.clone()])];
                let cs = self.share(ctx, &parts)?;
                let mut out = Ann::new();
                for (c, x, seg) in [(&cs[0], a, Seg::Fst), (&cs[1], b, Seg::Snd)] {
                    for (i, v) in self.data(c, x)? {
                        out.insert(i.under(&[seg.clone()]), v);
                    }
                }
                Ok((out, q))
            }
            Expr::If(_, e1, e2) => {
                let r1 = self.derive(ctx, q, e1)?;
                let r2 = self.derive(ctx, q, e2)?;
                self.join(&[r1, r2])
            }
            Expr::CaseList { scrut, nil, head, tail, cons } => {
                let x = scrut.as_var().expect("let-normal case");
                let r1 = self.derive(ctx, q, nil)?;
                let mut c2 = ctx.clone();
                let mut p = self.data(ctx, x)?;
                if cons.free_vars().contains(x) {
                    let (mine, kept) = self.split(&p)?;
                    p = mine;
                    c2.insert(x.clone(), kept);
                } else {
                    c2.remove(x);
                }
                let (shifted, gain) = self.shift_terms(&p, &[]);
                let mut pt = Ann::new();
                for (i, ex) in shifted {
                    let v = self.var();
                    self.eq(LinExpr::var(v), ex)?;
                    pt.insert(i, v);
                }
                let q2 = self.var();
                self.eq(LinExpr::var(q2), LinExpr::var(q) + gain)?;
                let hidx = self.indices_of(&self.ty(head));
                let h: Ann = hidx.iter().map(|i| (i.clone(), self.zero)).collect();
                c2.insert(head.clone(), h);
                c2.insert(tail.clone(), pt);
                let r2 = self.derive(&c2, q2, cons)?;
                self.join(&[r1, r2])
            }
            Expr::CasePair { scrut, left, right, body } => {
                let x = scrut.as_var().expect("let-normal case");
                let mut c2 = ctx.clone();
                let mut p = self.data(ctx, x)?;
                if body.free_vars().contains(x) {
                    let (mine, kept) = self.split(&p)?;
                    p = mine;
                    c2.insert(x.clone(), kept);
                } else {
                    c2.remove(x);
                }
                for (y, seg) in [(left, Seg::Fst), (right, Seg::Snd)] {
                    let part: Ann = p.iter().filter_map(|(i, v)| Some((i.reroot(&[seg.clone()], &[])?, *v))).collect();
                    if !self.ty(y).contains_fun() {
                        c2.insert(y.clone(), part);
                    }
                }
                self.derive(&c2, q, body)
            }
            Expr::Let(x, e1, e2) => {
                if matches!(&**e1, Expr::Fun(..)) || self.ty(x).contains_fun() {
                    return self.derive(ctx, q, e2);
                }
                let used2: BTreeSet<Name> = e2.free_vars().into_iter().filter(|y| y != x).collect();
                let cs = self.share(ctx, &[e1.free_vars(), used2])?;
                let (a1, q1) = self.derive(&cs[0], q, e1)?;
                let mut c2 = cs[1].clone();
                c2.insert(x.clone(), a1);
                self.derive(&c2, q1, e2)
            }
            Expr::Fun(..) => Err(ClassicError::HigherOrder { fun: self.unit_name(), var: self.unit_name() }),
            Expr::App(f, y) => {
                let f = f.as_var().expect("let-normal application");
                let y = y.as_var().expect("let-normal application");
                let target = self.an.units.resolve_var(f).cloned().unwrap_or_else(|| f.clone());
                let u = *self
                    .an
                    .units
                    .index
                    .get(&target)
                    .ok_or_else(|| ClassicError::HigherOrder { fun: self.unit_name(), var: f.clone() })?;
                let c = self.data(ctx, y)?;
                let inst = self.instance(u)?;
                for (i, v) in &inst.0 {
                    let have = self.at(&c, i);
                    self.ge(LinExpr::var(have), v.clone())?;
                }
                let k = self.var();
                self.eq(LinExpr::var(q), inst.1 + LinExpr::var(k))?;
                let idx: Vec<Index> = inst.2.keys().cloned().collect();
                let r = self.ann(&idx);
                for i in &idx {
                    self.eq(LinExpr::var(r[i]), inst.2[i].clone())?;
                }
                let q2 = self.var();
                self.eq(LinExpr::var(q2), inst.3 + LinExpr::var(k))?;
                Ok((r, q2))
            }
        }
    }

    /// The annotated type used at a call of unit `u`: argument, argument
    /// constant, result and result constant, as affine forms.
    #[allow(clippy::type_complexity)]
    fn instance(&mut self, u: usize) -> Result<(BTreeMap<Index, LinExpr>, LinExpr, BTreeMap<Index, LinExpr>, LinExpr), ClassicError> {
        let w = self.width();
        let mode = self.mode();
        let mut parts: Vec<AnnSig> = Vec::new();
        if let Some(fr) = self.stack.iter().rev().find(|fr| fr.unit == u) {
            let sig = fr.sig.clone();
            let fw = sig.width;
            parts.push(sig);
            if fw > 1 {
                parts.push(self.type_unit(u, fw - 1, Mode::CostFree)?);
            }
        } else {
            if mode == Mode::Costful {
                let main = match self.main.get(&u) {
                    Some(s) => s.clone(),
                    None => self.type_main(u)?,
                };
                parts.push(main);
            }
            let sig = if self.cfg.memoize {
                match self.memo.get(&(u, w)) {
                    Some(s) => s.clone(),
                    None => {
                        let s = self.type_unit(u, w, Mode::CostFree)?;
                        self.memo.insert((u, w), s.clone());
                        s
                    }
                }
            } else {
                self.type_unit(u, w, Mode::CostFree)?
            };
            parts.push(sig);
        }
        let sum = |get: &dyn Fn(&AnnSig) -> &Ann| {
            let mut out: BTreeMap<Index, LinExpr> = BTreeMap::new();
            for s in &parts {
                for (i, v) in get(s) {
                    out.entry(i.clone()).or_insert_with(LinExpr::zero).add_term(*v, Rational::one());
                }
            }
            out
        };
        let arg = sum(&|s| &s.arg);
        let ret = sum(&|s| &s.ret);
        let qa = parts.iter().fold(LinExpr::zero(), |e, s| e + LinExpr::var(s.arg_const));
        let qr = parts.iter().fold(LinExpr::zero(), |e, s| e + LinExpr::var(s.ret_const));
        Ok((arg, qa, ret, qr))
    }

    fn type_main(&mut self, u: usize) -> Result<AnnSig, ClassicError> {
        let s = self.type_unit(u, width_of(self.cfg.basis), self.cfg.mode)?;
        self.main.insert(u, s.clone());
        Ok(s)
    }

    /// Types the body of unit `u` against a fresh signature of width `w`.
    fn type_unit(&mut self, u: usize, w: usize, mode: Mode) -> Result<AnnSig, ClassicError> {
        self.retypings += 1;
        let unit = &self.an.units.units[u];
        let (at, rt) = match self.ty(&unit.name) {
            Ty::Fun(a, r) => (*a, *r),
            _ => return Err(ClassicError::HigherOrder { fun: unit.name.clone(), var: unit.name.clone() }),
        };
        let b = basis_at(self.cfg.basis, w);
        let (ai, ri) = (rel_indices(&at, b), rel_indices(&rt, b));
        let sig = AnnSig { arg: self.ann(&ai), arg_const: self.var(), ret: self.ann(&ri), ret_const: self.var(), width: w };
        let (arg, body) = (unit.arg.clone(), unit.body.clone());
        let captured: Vec<Name> = unit.captured.iter().cloned().collect();
        let mut ctx = Ctx::new();
        ctx.insert(arg, sig.arg.clone());
        for x in captured {
            let t = self.ty(&x);
            if !t.contains_fun() {
                let z: Ann = rel_indices(&t, b).into_iter().map(|i| (i, self.zero)).collect();
                ctx.insert(x, z);
            }
        }
        self.stack.push(Frame { unit: u, sig: sig.clone(), mode });
        let res = self.derive(&ctx, sig.arg_const, &body);
        self.stack.pop();
        let (r, q) = res?;
        for (i, v) in &sig.ret {
            let have = self.at(&r, i);
            self.ge(LinExpr::var(have), LinExpr::var(*v))?;
        }
        self.ge(LinExpr::var(q), LinExpr::var(sig.ret_const))?;
        Ok(sig)
    }
}

/// Generates the classic constraint system for every function of `p`.
///
/// Each function gets one main typing at the configured width and mode, in
/// callee-first order. Higher-order definitions are specialized first.
pub fn classic_generate(p: &crate::lang::Program, cfg: &ClassicConfig) -> Result<ClassicLp, ClassicError> {
    let start = Instant::now();
    let p = expand_higher_order(p)?;
    let an = Analysis::new(&p)?;
    let mut lp = LPProblem::new();
    let zero = lp.add_var("zero", true);
    let mut g = Gen {
        an: &an,
        cfg,
        lp,
        storing: true,
        rows: 0,
        nvars: 1,
        zero,
        stack: Vec::new(),
        memo: HashMap::new(),
        main: HashMap::new(),
        retypings: 0,
    };
    g.eq(LinExpr::var(zero), LinExpr::zero())?;
    for scc in an.units.sccs() {
        for u in scc {
            if !g.main.contains_key(&u) {
                g.type_main(u)?;
            }
        }
    }
    let sigs = g.main.iter().map(|(u, s)| (an.units.units[*u].name.to_string(), s.clone())).collect();
    Ok(ClassicLp {
        stored: g.storing,
        problem: g.lp,
        sigs,
        zero,
        constraints: g.rows,
        vars: g.nvars,
        retypings: g.retypings,
        gen_secs: start.elapsed().as_secs_f64(),
    })
}

fn weight(i: &Index) -> Rational {
    let r = match i.leaf {
        Leaf::Deg(k) => k,
        Leaf::Base(b) => b - 1,
        Leaf::Const => 0,
    };
    Rational::from_integer(BigInt::from(10).pow(r))
}

/// `Σ 10^rank(i) · a_i` over an annotation and its constant.
pub fn weighted(a: &Ann, q: VarId) -> LinExpr {
    let mut e = LinExpr::var(q);
    for (i, v) in a {
        e.add_term(*v, weight(i));
    }
    e
}

/// What to fix before solving.
#[derive(Clone, Debug, Default)]
pub struct Pins {
    /// Fix the argument annotation of the target, constant included.
    pub input: Option<crate::potential::AnnVec>,
    /// Require the result annotation to equal the argument annotation.
    pub output_equals_input: bool,
    /// Lower bounds on the result annotation, constant included.
    pub output_at_least: Option<crate::potential::AnnVec>,
}

#[derive(Clone, Debug)]
pub struct ClassicReport {
    pub name: String,
    pub mode: Mode,
    /// `None` when the system was too large to keep and only counted.
    pub status: Option<Status>,
    pub basis: Basis,
    /// Solved argument annotation, indices rooted at `a`, constant under `c`.
    pub arg: BTreeMap<Index, Rational>,
    pub ret: BTreeMap<Index, Rational>,
    pub constraints: usize,
    pub vars: usize,
    pub retypings: usize,
    pub gen_secs: f64,
    pub solve_secs: f64,
}

impl ClassicReport {
    pub fn to_json(&self) -> Json {
        let show = |m: &BTreeMap<Index, Rational>| -> Json {
            m.iter().map(|(i, q)| (i.to_string(), Json::String(rational_to_string(q)))).collect::<serde_json::Map<_, _>>().into()
        };
        json!({
            "algo": "classic",
            "name": self.name,
            "mode": self.mode,
            "status": self.status_name(),
            "arg": show(&self.arg),
            "ret": show(&self.ret),
            "constraints": self.constraints,
            "lp_stats": {"vars": self.vars, "constraints": self.constraints, "solve_state": self.status_name()},
            "retypings": self.retypings,
            "gen_secs": self.gen_secs,
            "solve_secs": self.solve_secs,
        })
    }

    pub fn status_name(&self) -> String {
        self.status.map_or_else(|| "count_only".to_string(), |s| s.to_string())
    }

    /// Value of one argument index, e.g. `a.deg1`, or `c`.
    pub fn arg_at(&self, i: &str) -> Rational {
        self.arg.get(&i.parse::<Index>().expect("index")).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn ret_at(&self, i: &str) -> Rational {
        self.ret.get(&i.parse::<Index>().expect("index")).cloned().unwrap_or_else(Rational::zero)
    }
}

fn rooted(a: &Ann, root: Seg) -> Vec<(Index, VarId)> {
    a.iter().map(|(i, v)| (i.under(&[root.clone()]), *v)).collect()
}

/// Classic inference for `fname`.
///
/// Costful mode minimizes the weighted argument potential. Cost-free mode
/// maximizes the weighted result potential; without an input pin the
/// argument is fixed to one unit on its highest list index.
pub fn classic_infer(p: &crate::lang::Program, fname: &str, cfg: &ClassicConfig, pins: &Pins) -> Result<ClassicReport, ClassicError> {
    let mut g = classic_generate(p, cfg)?;
    let sig = g.sigs.get(fname).cloned().ok_or_else(|| AnalysisError::UnknownFunction(fname.to_string()))?;
    let mut report = ClassicReport {
        name: fname.to_string(),
        mode: cfg.mode,
        status: None,
        basis: cfg.basis,
        arg: BTreeMap::new(),
        ret: BTreeMap::new(),
        constraints: g.constraints,
        vars: g.vars,
        retypings: g.retypings,
        gen_secs: g.gen_secs,
        solve_secs: 0.0,
    };
    if !g.stored {
        return Ok(report);
    }
    let lp = &mut g.problem;
    let arg_vars: Vec<(Index, VarId)> = {
        let mut v = rooted(&sig.arg, Seg::Arg);
        v.push((Index::constant(), sig.arg_const));
        v
    };
    let ret_vars: Vec<(Index, VarId)> = {
        let mut v = rooted(&sig.ret, Seg::Ret);
        v.push((Index::constant(), sig.ret_const));
        v
    };
    let input = match (&pins.input, cfg.mode, pins.output_equals_input) {
        (Some(a), _, _) => Some(a.clone()),
        (None, Mode::CostFree, false) => {
            let mut a = crate::potential::AnnVec::new();
            if let Some((i, _)) = arg_vars.iter().filter(|(i, _)| !i.is_const()).min() {
                a.set(i.clone(), Rational::one());
            }
            Some(a)
        }
        _ => None,
    };
    if let Some(a) = &input {
        for (i, v) in &arg_vars {
            lp.equal(LinExpr::var(*v), LinExpr::constant(a.get(i)));
        }
    }
    if pins.output_equals_input {
        for (i, v) in &sig.arg {
            if let Some(r) = sig.ret.get(i) {
                lp.equal(LinExpr::var(*v), LinExpr::var(*r));
            }
        }
    }
    if let Some(lo) = &pins.output_at_least {
        for (i, v) in &ret_vars {
            let b = lo.get(i);
            if !b.is_zero() {
                lp.ge(LinExpr::var(*v), LinExpr::constant(b));
            }
        }
    }
    let obj = match (cfg.mode, pins.output_equals_input) {
        (_, true) => weighted(&sig.arg, g.zero),
        (Mode::CostFree, false) => weighted(&sig.ret, sig.ret_const),
        (Mode::Costful, false) => -weighted(&sig.arg, sig.arg_const),
    };
    lp.maximize(obj);
    let t = Instant::now();
    let sol = solve_with(lp, &SolveOptions { deadline: cfg.deadline });
    report.solve_secs = t.elapsed().as_secs_f64();
    report.status = Some(sol.status);
    if sol.is_optimal() {
        report.arg = arg_vars.iter().map(|(i, v)| (i.clone(), sol.value(*v))).collect();
        report.ret = ret_vars.iter().map(|(i, v)| (i.clone(), sol.value(*v))).collect();
    }
    Ok(report)
}

/// Number of constraints emitted, retyping cascades included.
pub fn classic_constraint_count(report: &ClassicReport) -> usize {
    report.constraints
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::parse_program;
    use crate::potential::AnnVec;

    const HALF: &str = "fun half lst = case lst of [] -> [] | x1::xs1 -> case xs1 of [] -> [] | x2::xs2 -> let tmp = half xs2 in x1::tmp";

    fn q(n: i64) -> Rational {
        Rational::from_integer(n.into())
    }

    #[test]
    fn id_with_tick_costs_one_per_element() {
        let p = parse_program("fun id lst = case lst of [] -> [] | x::xs -> tick 1 in let ys = id xs in x::ys").unwrap();
        let r = classic_infer(&p, "id", &ClassicConfig::new(Basis::poly(1), Mode::Costful), &Pins::default()).unwrap();
        assert_eq!(r.status, Some(Status::Optimal));
        assert_eq!(r.arg_at("a.deg1"), q(1));
        assert_eq!(r.arg_at("c"), q(0));
        assert_eq!(r.ret_at("r.deg1"), q(0));
        assert_eq!(r.ret_at("c"), q(0));
    }

    #[test]
    fn half_quadratic_goes_to_four_one() {
        let p = parse_program(HALF).unwrap();
        let pins = Pins { input: Some(AnnVec::new().with("a.deg2", 1)), ..Pins::default() };
        let r = classic_infer(&p, "half", &ClassicConfig::new(Basis::poly(2), Mode::CostFree), &pins).unwrap();
        assert_eq!(r.status, Some(Status::Optimal));
        assert_eq!(r.ret_at("r.deg2"), q(4));
        assert_eq!(r.ret_at("r.deg1"), q(1));
    }

    #[test]
    fn half_exponential_only_reallocates_zero() {
        let p = parse_program(HALF).unwrap();
        let cfg = ClassicConfig::new(Basis::exp(4), Mode::CostFree);
        let pins = Pins { input: Some(AnnVec::new().with("a.base2", 1)), ..Pins::default() };
        let r = classic_infer(&p, "half", &cfg, &pins).unwrap();
        assert_eq!(r.status, Some(Status::Optimal));
        for i in ["r.base4", "r.base3", "r.base2"] {
            assert_eq!(r.ret_at(i), q(0), "{i}");
        }
        let pins = Pins { output_at_least: Some(AnnVec::new().with("r.base2", 1)), ..pins };
        assert_eq!(classic_infer(&p, "half", &cfg, &pins).unwrap().status, Some(Status::Infeasible));
    }

    #[test]
    fn round_is_forced_to_zero() {
        let p = parse_program(&format!(
            "{HALF}\nfun dbl l = case l of [] -> [] | y::ys -> let d = dbl ys in y::y::d\nfun round l = case l of [] -> [] | z::zs -> let h = half zs in let r = round h in let d = dbl r in z::d"
        ))
        .unwrap();
        let pins = Pins { output_equals_input: true, ..Pins::default() };
        let r = classic_infer(&p, "round", &ClassicConfig::new(Basis::poly(1), Mode::CostFree), &pins).unwrap();
        assert_eq!(r.status, Some(Status::Optimal));
        assert_eq!(r.arg_at("a.deg1"), q(0));
    }

    #[test]
    fn half_linear_retyping_doubles() {
        let p = parse_program(HALF).unwrap();
        let pins = Pins { input: Some(AnnVec::new().with("a.deg1", 1)), ..Pins::default() };
        let r = classic_infer(&p, "half", &ClassicConfig::new(Basis::poly(1), Mode::CostFree), &pins).unwrap();
        assert_eq!(r.ret_at("r.deg1"), q(2));
    }

    #[test]
    fn every_call_retypes_unless_memoized() {
        let src = "fun id x = x\nfun two l = let a = id l in id a";
        let p = parse_program(src).unwrap();
        let cfg = ClassicConfig::new(Basis::poly(2), Mode::CostFree);
        let plain = classic_generate(&p, &cfg).unwrap();
        assert_eq!(plain.retypings, 4);
        let memo = classic_generate(&p, &ClassicConfig { memoize: true, ..cfg }).unwrap();
        assert_eq!(memo.retypings, 3);
        assert!(memo.constraints < plain.constraints);
    }

    #[test]
    fn budget_stops_generation() {
        let p = parse_program(HALF).unwrap();
        let cfg = ClassicConfig { max_constraints: Some(5), ..ClassicConfig::new(Basis::poly(3), Mode::CostFree) };
        assert!(matches!(classic_generate(&p, &cfg), Err(ClassicError::Budget(6))));
    }

    #[test]
    fn report_json_names_the_algorithm() {
        let p = parse_program(HALF).unwrap();
        let r = classic_infer(&p, "half", &ClassicConfig::new(Basis::poly(1), Mode::CostFree), &Pins::default()).unwrap();
        let j = r.to_json();
        assert_eq!(j["algo"], "classic");
        assert_eq!(j["status"], "optimal");
    }
}
