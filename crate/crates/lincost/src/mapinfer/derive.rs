use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::Arc;

use crate::lang::{Expr, Name, Ty, Typing};
use crate::linmap::{NonlinearTerm, PMat};
use crate::potential::{indices, indices_at, Basis, Index, Seg};

/// Cost-free types. Function types carry the matrix of their potential map.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CFType {
    Bool,
    Alpha,
    List(Box<CFType>),
    Pair(Box<CFType>, Box<CFType>),
    /// `None` when no matrix is known statically.
    Fun(Box<CFType>, Box<CFType>, Option<Arc<PMat>>),
}

impl CFType {
    /// Function types get no matrix.
    pub fn from_ty(t: &Ty) -> CFType {
        match t {
            Ty::Bool => CFType::Bool,
            Ty::Alpha => CFType::Alpha,
            Ty::List(e) => CFType::List(Box::new(CFType::from_ty(e))),
            Ty::Pair(a, b) => CFType::Pair(Box::new(CFType::from_ty(a)), Box::new(CFType::from_ty(b))),
            Ty::Fun(a, b) => CFType::Fun(Box::new(CFType::from_ty(a)), Box::new(CFType::from_ty(b)), None),
        }
    }

    pub fn fun(sig: &FunSig) -> CFType {
        CFType::Fun(Box::new(CFType::from_ty(&sig.arg)), Box::new(CFType::from_ty(&sig.ret)), Some(Arc::new(sig.mat.clone())))
    }

    /// The underlying base type.
    pub fn ty(&self) -> Ty {
        match self {
            CFType::Bool => Ty::Bool,
            CFType::Alpha => Ty::Alpha,
            CFType::List(e) => Ty::list(e.ty()),
            CFType::Pair(a, b) => Ty::pair(a.ty(), b.ty()),
            CFType::Fun(a, b, _) => Ty::fun(a.ty(), b.ty()),
        }
    }
}

impl fmt::Display for CFType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CFType::Fun(a, b, Some(_)) => write!(f, "({a} → {b} [M])"),
            t => write!(f, "{}", t.ty()),
        }
    }
}

/// Argument type, result type and matrix of one function.
///
/// The matrix acts on `a.*`, `r.*` and `c`. Its `a.*` rows are zero, so the
/// argument keeps no potential after the call.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FunSig {
    pub arg: Ty,
    pub ret: Ty,
    pub mat: PMat,
}

impl FunSig {
    pub fn arg_indices(&self, basis: Basis) -> Vec<Index> {
        indices_at(&[Seg::Arg], &self.arg, basis)
    }

    pub fn ret_indices(&self, basis: Basis) -> Vec<Index> {
        indices_at(&[Seg::Ret], &self.ret, basis)
    }

    /// Rows `r.* ∪ c`.
    pub fn rows(&self, basis: Basis) -> Vec<Index> {
        let mut v = self.ret_indices(basis);
        v.push(Index::constant());
        v
    }

    /// Columns `a.* ∪ c`.
    pub fn cols(&self, basis: Basis) -> Vec<Index> {
        let mut v = self.arg_indices(basis);
        v.push(Index::constant());
        v
    }

    /// The matrix given densely over `rows() × cols()`.
    pub fn from_dense(arg: Ty, ret: Ty, basis: Basis, entries: &[Vec<crate::linmap::Scalar>]) -> FunSig {
        let mut sig = FunSig { arg, ret, mat: PMat::identity() };
        let (rows, cols) = (sig.rows(basis), sig.cols(basis));
        sig.mat = PMat::from_dense(&rows, &cols, entries);
        sig
    }

    /// No reallocation: only the constant is kept.
    pub fn zero_realloc(arg: Ty, ret: Ty, basis: Basis) -> FunSig {
        let sig = FunSig { arg, ret, mat: PMat::identity() };
        let (rows, cols) = (sig.rows(basis), sig.cols(basis));
        let dense: Vec<Vec<_>> = rows
            .iter()
            .map(|i| cols.iter().map(|j| if i.is_const() && j.is_const() { crate::linmap::Scalar::one() } else { crate::linmap::Scalar::zero() }).collect())
            .collect();
        FunSig::from_dense(sig.arg, sig.ret, basis, &dense)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum DeriveError {
    #[error("type error: {0}")]
    Type(String),
    #[error("unbound variable `{0}`")]
    Unbound(Name),
    #[error(transparent)]
    Nonlinear(#[from] NonlinearTerm),
    #[error("unsupported higher-order application of `{0}`")]
    HigherOrder(Name),
}

/// The map sets of one expression: one matrix per path to the result, and
/// one per path to a scope exit or call argument.
#[derive(Clone, Debug)]
pub struct DeriveResult {
    pub ty: CFType,
    pub s: Vec<PMat>,
    pub c: Vec<PMat>,
}

pub type Ctx = BTreeMap<Name, CFType>;

/// Applies the typing rules over a let-normal body with distinct binders.
pub struct Deriver<'a> {
    pub basis: Basis,
    pub typing: &'a Typing,
    /// Signature of each function unit, by self name.
    pub sigs: &'a HashMap<Name, FunSig>,
    /// Function variable → unit name.
    pub resolve: &'a HashMap<Name, Name>,
}

fn var_path(x: &Name) -> Vec<Seg> {
    vec![Seg::Var(x.clone())]
}

fn cross(a: &[PMat], b: &[PMat], f: impl Fn(&PMat, &PMat) -> Result<PMat, NonlinearTerm>) -> Result<Vec<PMat>, NonlinearTerm> {
    let mut out = Vec::with_capacity(a.len() * b.len());
    for x in a {
        for y in b {
            out.push(f(x, y)?);
        }
    }
    Ok(out)
}

impl Deriver<'_> {
    /// Cost-free type of a binder, with its matrix if it names a known function.
    pub fn binder_type(&self, x: &Name) -> Result<CFType, DeriveError> {
        let t = self.typing.of(x).ok_or_else(|| DeriveError::Unbound(x.clone()))?;
        if t.is_fun() {
            if let Some(sig) = self.resolve.get(x).and_then(|u| self.sigs.get(u)) {
                return Ok(CFType::fun(sig));
            }
        }
        Ok(CFType::from_ty(t))
    }

    fn lookup<'c>(&self, ctx: &'c Ctx, x: &Name) -> Result<&'c CFType, DeriveError> {
        ctx.get(x).ok_or_else(|| DeriveError::Unbound(x.clone()))
    }

    fn var_indices(&self, ctx: &Ctx, x: &Name) -> Result<Vec<Index>, DeriveError> {
        Ok(indices_at(&var_path(x), &self.lookup(ctx, x)?.ty(), self.basis))
    }

    fn expect_var<'e>(&self, e: &'e Expr) -> Result<&'e Name, DeriveError> {
        e.as_var().ok_or_else(|| DeriveError::Type("expression is not let-normal".into()))
    }

    pub fn derive(&self, ctx: &Ctx, e: &Expr) -> Result<DeriveResult, DeriveError> {
        let b = self.basis;
        let ty_of = |e: &Expr| -> Result<CFType, DeriveError> {
            self.typing.type_of(e).map(|t| CFType::from_ty(&t)).map_err(|err| DeriveError::Type(err.0))
        };
        match e {
            Expr::Bool(_) => Ok(DeriveResult { ty: CFType::Bool, s: vec![PMat::identity()], c: Vec::new() }),
            Expr::Var(x) => {
                let t = self.lookup(ctx, x)?.clone();
                let m = PMat::mv(&var_path(x), &[Seg::Ret], &indices(&t.ty(), b));
                Ok(DeriveResult { ty: t, s: vec![m], c: Vec::new() })
            }
            Expr::Nil => Ok(DeriveResult { ty: ty_of(e)?, s: vec![PMat::nil(&[Seg::Ret], b)], c: Vec::new() }),
            Expr::Cons(h, t) => {
                self.lookup(ctx, self.expect_var(h)?)?;
                let t = self.expect_var(t)?;
                let ty = self.lookup(ctx, t)?.clone();
                Ok(DeriveResult { ty, s: vec![PMat::unshift(&var_path(t), &[Seg::Ret], b)], c: Vec::new() })
            }
            Expr::Pair(x, y) => {
                let (x, y) = (self.expect_var(x)?, self.expect_var(y)?);
                let (tx, ty) = (self.lookup(ctx, x)?.clone(), self.lookup(ctx, y)?.clone());
                let mx = PMat::mv(&var_path(x), &[Seg::Ret, Seg::Fst], &indices(&tx.ty(), b));
                let my = PMat::mv(&var_path(y), &[Seg::Ret, Seg::Snd], &indices(&ty.ty(), b));
                let m = my.compose(&mx)?;
                Ok(DeriveResult { ty: CFType::Pair(Box::new(tx), Box::new(ty)), s: vec![m], c: Vec::new() })
            }
            Expr::If(v, e1, e2) => {
                self.lookup(ctx, self.expect_var(v)?)?;
                let mut r1 = self.derive(ctx, e1)?;
                let r2 = self.derive(ctx, e2)?;
                r1.s.extend(r2.s);
                r1.c.extend(r2.c);
                Ok(r1)
            }
            Expr::CaseList { scrut, nil, head, tail, cons } => {
                let l = self.expect_var(scrut)?;
                let lt = self.lookup(ctx, l)?.clone();
                let r1 = self.derive(ctx, nil)?;
                let mut inner = ctx.clone();
                inner.insert(head.clone(), self.binder_type(head)?);
                inner.insert(tail.clone(), lt);
                let r2 = self.derive(&inner, cons)?;
                let nil_l = PMat::nil(&var_path(l), b);
                let mut ht = self.var_indices(&inner, head)?;
                ht.extend(self.var_indices(&inner, tail)?);
                let enter = PMat::shift(&var_path(l), &var_path(tail), b)
                    .compose(&PMat::zero(self.var_indices(&inner, head)?))?;
                let not_ht = PMat::proj_neg(ht.iter().cloned());
                let only_ht = PMat::proj(ht.iter().cloned());
                let mut s = Vec::new();
                for m in &r1.s {
                    s.push(m.compose(&nil_l)?);
                }
                for t in &r2.s {
                    s.push(PMat::chain(&[&not_ht, t, &enter])?);
                }
                let mut c = Vec::new();
                for m in &r1.c {
                    c.push(m.compose(&nil_l)?);
                }
                for t in &r2.s {
                    c.push(PMat::chain(&[&only_ht, t, &enter])?);
                }
                for d in &r2.c {
                    c.push(d.compose(&enter)?);
                }
                Ok(DeriveResult { ty: r1.ty, s, c })
            }
            Expr::CasePair { scrut, left, right, body } => {
                let p = self.expect_var(scrut)?;
                let (tl, tr) = match self.lookup(ctx, p)? {
                    CFType::Pair(a, b) => ((**a).clone(), (**b).clone()),
                    t => return Err(DeriveError::Type(format!("case on a non-pair of type {t}"))),
                };
                let mut inner = ctx.clone();
                inner.insert(left.clone(), tl.clone());
                inner.insert(right.clone(), tr.clone());
                let r = self.derive(&inner, body)?;
                let split = PMat::mv(&[Seg::Var(p.clone()), Seg::Fst], &var_path(left), &indices(&tl.ty(), b))
                    .compose(&PMat::mv(&[Seg::Var(p.clone()), Seg::Snd], &var_path(right), &indices(&tr.ty(), b)))?;
                let mut xy = self.var_indices(&inner, left)?;
                xy.extend(self.var_indices(&inner, right)?);
                let not_xy = PMat::proj_neg(xy.iter().cloned());
                let only_xy = PMat::proj(xy.iter().cloned());
                let mut s = Vec::new();
                let mut c = Vec::new();
                for t in &r.s {
                    s.push(PMat::chain(&[&not_xy, t, &split])?);
                    c.push(PMat::chain(&[&only_xy, t, &split])?);
                }
                for d in &r.c {
                    c.push(d.compose(&split)?);
                }
                Ok(DeriveResult { ty: r.ty, s, c })
            }
            Expr::Let(x, e1, e2) => {
                let r1 = self.derive(ctx, e1)?;
                let mut inner = ctx.clone();
                let xt = match &r1.ty {
                    CFType::Fun(_, _, None) => self.binder_type(x)?,
                    t => t.clone(),
                };
                inner.insert(x.clone(), xt.clone());
                let r2 = self.derive(&inner, e2)?;
                let xi = indices_at(&var_path(x), &xt.ty(), b);
                let bind = PMat::mv(&[Seg::Ret], &var_path(x), &indices(&xt.ty(), b));
                let entered: Vec<PMat> = r1.s.iter().map(|m| bind.compose(m)).collect::<Result<_, _>>()?;
                let not_x = PMat::proj_neg(xi.iter().cloned());
                let only_x = PMat::proj(xi.iter().cloned());
                let s = cross(&r2.s, &entered, |t, m| PMat::chain(&[&not_x, t, m]))?;
                let mut c = r1.c;
                c.extend(cross(&r2.s, &entered, |t, m| PMat::chain(&[&only_x, t, m]))?);
                c.extend(cross(&r2.c, &entered, |d, m| d.compose(m))?);
                Ok(DeriveResult { ty: r2.ty, s, c })
            }
            Expr::Fun(f, _, _) => {
                let ty = self.binder_type(f)?;
                Ok(DeriveResult { ty, s: vec![PMat::identity()], c: Vec::new() })
            }
            Expr::App(f, x) => {
                let f = self.expect_var(f)?;
                let x = self.expect_var(x)?;
                let (ret, m) = match self.lookup(ctx, f)? {
                    CFType::Fun(_, ret, Some(m)) => ((**ret).clone(), m.clone()),
                    CFType::Fun(_, _, None) => return Err(DeriveError::HigherOrder(f.clone())),
                    t => return Err(DeriveError::Type(format!("applying `{f}` of type {t}"))),
                };
                let xt = self.lookup(ctx, x)?.ty();
                let pass = PMat::mv(&var_path(x), &[Seg::Arg], &indices(&xt, b));
                let s = m.compose(&pass)?;
                let mut keep = indices_at(&var_path(x), &xt, b);
                keep.push(Index::constant());
                Ok(DeriveResult { ty: ret, s: vec![s], c: vec![PMat::proj(keep)] })
            }
            Expr::Tick(_, e) => self.derive(ctx, e),
        }
    }
}
