use std::collections::HashMap;
use std::fmt;

use super::ast::{Expr, Item, Name, Program};

/// Base (unannotated) types.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Ty {
    Bool,
    /// Abstract element type; carries no potential.
    Alpha,
    List(Box<Ty>),
    Pair(Box<Ty>, Box<Ty>),
    Fun(Box<Ty>, Box<Ty>),
}

impl Ty {
    pub fn list(t: Ty) -> Ty {
        Ty::List(Box::new(t))
    }

    pub fn pair(a: Ty, b: Ty) -> Ty {
        Ty::Pair(Box::new(a), Box::new(b))
    }

    pub fn fun(a: Ty, b: Ty) -> Ty {
        Ty::Fun(Box::new(a), Box::new(b))
    }

    pub fn is_fun(&self) -> bool {
        matches!(self, Ty::Fun(..))
    }

    /// True if a value of this type can hold a function.
    pub fn contains_fun(&self) -> bool {
        match self {
            Ty::Bool | Ty::Alpha => false,
            Ty::Fun(..) => true,
            Ty::List(t) => t.contains_fun(),
            Ty::Pair(a, b) => a.contains_fun() || b.contains_fun(),
        }
    }
}

impl fmt::Display for Ty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ty::Bool => write!(f, "B"),
            Ty::Alpha => write!(f, "α"),
            Ty::List(t) => write!(f, "L({t})"),
            Ty::Pair(a, b) => write!(f, "({a} × {b})"),
            Ty::Fun(a, b) => write!(f, "({a} → {b})"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TypeError(pub String);

impl fmt::Display for TypeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "type error: {}", self.0)
    }
}

impl std::error::Error for TypeError {}

#[derive(Clone, Debug)]
enum T {
    Var(usize),
    Bool,
    List(Box<T>),
    Pair(Box<T>, Box<T>),
    Fun(Box<T>, Box<T>),
}

#[derive(Default)]
struct Unifier {
    subst: Vec<Option<T>>,
}

impl Unifier {
    fn fresh(&mut self) -> T {
        self.subst.push(None);
        T::Var(self.subst.len() - 1)
    }

    fn resolve(&self, t: &T) -> T {
        match t {
            T::Var(v) => match &self.subst[*v] {
                Some(u) => self.resolve(u),
                None => t.clone(),
            },
            _ => t.clone(),
        }
    }

    fn occurs(&self, v: usize, t: &T) -> bool {
        match self.resolve(t) {
            T::Var(w) => v == w,
            T::Bool => false,
            T::List(a) => self.occurs(v, &a),
            T::Pair(a, b) | T::Fun(a, b) => self.occurs(v, &a) || self.occurs(v, &b),
        }
    }

    fn unify(&mut self, a: &T, b: &T) -> Result<(), TypeError> {
        let (a, b) = (self.resolve(a), self.resolve(b));
        match (&a, &b) {
            (T::Var(v), T::Var(w)) if v == w => Ok(()),
            (T::Var(v), t) | (t, T::Var(v)) => {
                if self.occurs(*v, t) {
                    return Err(TypeError("infinite type".into()));
                }
                self.subst[*v] = Some(t.clone());
                Ok(())
            }
            (T::Bool, T::Bool) => Ok(()),
            (T::List(x), T::List(y)) => self.unify(x, y),
            (T::Pair(x1, y1), T::Pair(x2, y2)) | (T::Fun(x1, y1), T::Fun(x2, y2)) => {
                self.unify(x1, x2)?;
                self.unify(y1, y2)
            }
            _ => Err(TypeError(format!("cannot unify {} with {}", self.show(&a), self.show(&b)))),
        }
    }

    fn lift(&mut self, t: &Ty) -> T {
        match t {
            Ty::Alpha => self.fresh(),
            Ty::Bool => T::Bool,
            Ty::List(a) => T::List(Box::new(self.lift(a))),
            Ty::Pair(a, b) => T::Pair(Box::new(self.lift(a)), Box::new(self.lift(b))),
            Ty::Fun(a, b) => T::Fun(Box::new(self.lift(a)), Box::new(self.lift(b))),
        }
    }

    fn zonk(&self, t: &T) -> Ty {
        match self.resolve(t) {
            T::Var(_) => Ty::Alpha,
            T::Bool => Ty::Bool,
            T::List(a) => Ty::list(self.zonk(&a)),
            T::Pair(a, b) => Ty::pair(self.zonk(&a), self.zonk(&b)),
            T::Fun(a, b) => Ty::fun(self.zonk(&a), self.zonk(&b)),
        }
    }

    fn show(&self, t: &T) -> String {
        self.zonk(t).to_string()
    }
}

/// Result of base typechecking: one type per binder and top-level name.
///
/// Binder names are assumed distinct, which holds after
/// [`normalize_program`](crate::lang::normalize_program).
#[derive(Clone, Debug, Default)]
pub struct Typing {
    pub vars: HashMap<Name, Ty>,
}

impl Typing {
    pub fn of(&self, x: &str) -> Option<&Ty> {
        self.vars.get(x)
    }

    /// Type of an expression, read off the binder types.
    pub fn type_of(&self, e: &Expr) -> Result<Ty, TypeError> {
        let var = |x: &Name| self.vars.get(x).cloned().ok_or_else(|| TypeError(format!("unbound variable `{x}`")));
        match e {
            Expr::Bool(_) => Ok(Ty::Bool),
            Expr::Var(x) => var(x),
            Expr::Nil => Ok(Ty::list(Ty::Alpha)),
            Expr::Cons(_, t) => self.type_of(t),
            Expr::Pair(a, b) => Ok(Ty::pair(self.type_of(a)?, self.type_of(b)?)),
            Expr::If(_, e1, _) => self.type_of(e1),
            Expr::CaseList { cons, .. } => self.type_of(cons),
            Expr::CasePair { body, .. } => self.type_of(body),
            Expr::Let(_, _, e2) => self.type_of(e2),
            Expr::Fun(f, _, _) => var(f),
            Expr::App(f, _) => match self.type_of(f)? {
                Ty::Fun(_, r) => Ok(*r),
                t => Err(TypeError(format!("applying a value of type {t}"))),
            },
            Expr::Tick(_, e) => self.type_of(e),
        }
    }
}

struct Checker {
    u: Unifier,
    vars: HashMap<Name, T>,
}

impl Checker {
    fn record(&mut self, x: &Name, t: &T) -> Result<(), TypeError> {
        if let Some(old) = self.vars.get(x).cloned() {
            self.u.unify(&old, t)
        } else {
            self.vars.insert(x.clone(), t.clone());
            Ok(())
        }
    }

    fn infer(&mut self, env: &mut Vec<(Name, T)>, e: &Expr) -> Result<T, TypeError> {
        match e {
            Expr::Bool(_) => Ok(T::Bool),
            Expr::Var(x) => env
                .iter()
                .rev()
                .find(|(y, _)| y == x)
                .map(|(_, t)| t.clone())
                .or_else(|| self.vars.get(x).cloned())
                .ok_or_else(|| TypeError(format!("unbound variable `{x}`"))),
            Expr::Nil => {
                let a = self.u.fresh();
                Ok(T::List(Box::new(a)))
            }
            Expr::Cons(h, t) => {
                let th = self.infer(env, h)?;
                let tt = self.infer(env, t)?;
                self.u.unify(&T::List(Box::new(th)), &tt)?;
                Ok(tt)
            }
            Expr::Pair(a, b) => Ok(T::Pair(Box::new(self.infer(env, a)?), Box::new(self.infer(env, b)?))),
            Expr::If(b, e1, e2) => {
                let tb = self.infer(env, b)?;
                self.u.unify(&tb, &T::Bool)?;
                let t1 = self.infer(env, e1)?;
                let t2 = self.infer(env, e2)?;
                self.u.unify(&t1, &t2)?;
                Ok(t1)
            }
            Expr::CaseList { scrut, nil, head, tail, cons } => {
                let ts = self.infer(env, scrut)?;
                let a = self.u.fresh();
                let tl = T::List(Box::new(a.clone()));
                self.u.unify(&ts, &tl)?;
                let t1 = self.infer(env, nil)?;
                self.record(head, &a)?;
                self.record(tail, &tl)?;
                env.push((head.clone(), a));
                env.push((tail.clone(), tl));
                let t2 = self.infer(env, cons);
                env.truncate(env.len() - 2);
                let t2 = t2?;
                self.u.unify(&t1, &t2)?;
                Ok(t1)
            }
            Expr::CasePair { scrut, left, right, body } => {
                let ts = self.infer(env, scrut)?;
                let (a, b) = (self.u.fresh(), self.u.fresh());
                self.u.unify(&ts, &T::Pair(Box::new(a.clone()), Box::new(b.clone())))?;
                self.record(left, &a)?;
                self.record(right, &b)?;
                env.push((left.clone(), a));
                env.push((right.clone(), b));
                let t = self.infer(env, body);
                env.truncate(env.len() - 2);
                t
            }
            Expr::Let(x, e1, e2) => {
                let t1 = self.infer(env, e1)?;
                self.record(x, &t1)?;
                env.push((x.clone(), t1));
                let t = self.infer(env, e2);
                env.pop();
                t
            }
            Expr::Fun(f, x, body) => {
                let (a, r) = (self.u.fresh(), self.u.fresh());
                let tf = T::Fun(Box::new(a.clone()), Box::new(r.clone()));
                self.record(f, &tf)?;
                self.record(x, &a)?;
                env.push((f.clone(), tf.clone()));
                env.push((x.clone(), a));
                let tb = self.infer(env, body);
                env.truncate(env.len() - 2);
                self.u.unify(&tb?, &r)?;
                Ok(tf)
            }
            Expr::App(f, x) => {
                let tf = self.infer(env, f)?;
                let tx = self.infer(env, x)?;
                let r = self.u.fresh();
                self.u.unify(&tf, &T::Fun(Box::new(tx), Box::new(r.clone())))?;
                Ok(r)
            }
            Expr::Tick(_, e) => self.infer(env, e),
        }
    }
}

/// Monomorphic base typechecking of a whole program.
///
/// Top-level names are visible in every item. Type variables left unresolved
/// become [`Ty::Alpha`]. The hints of the program are unified with the types
/// of the binders they name; hints for absent names are ignored.
pub fn typecheck_program(p: &Program) -> Result<Typing, TypeError> {
    let mut c = Checker { u: Unifier::default(), vars: HashMap::new() };
    for (n, _) in p.defs() {
        let t = c.u.fresh();
        c.record(n, &t)?;
    }
    for item in &p.items {
        let mut env = Vec::new();
        match item {
            Item::Def(n, e) => {
                let t = c.infer(&mut env, e)?;
                let tn = c.vars[n].clone();
                c.u.unify(&tn, &t).map_err(|TypeError(m)| TypeError(format!("in `{n}`: {m}")))?;
            }
            Item::Main(e) => {
                c.infer(&mut env, e)?;
            }
        }
    }
    for (x, h) in &p.hints {
        if let Some(t) = c.vars.get(x).cloned() {
            let h = c.u.lift(h);
            c.u.unify(&t, &h).map_err(|TypeError(m)| TypeError(format!("hint for `{x}`: {m}")))?;
        }
    }
    let vars = c.vars.iter().map(|(x, t)| (x.clone(), c.u.zonk(t))).collect();
    Ok(Typing { vars })
}

/// Typechecks a single closed expression.
pub fn typecheck(e: &Expr) -> Result<(Ty, Typing), TypeError> {
    let mut c = Checker { u: Unifier::default(), vars: HashMap::new() };
    let t = c.infer(&mut Vec::new(), e)?;
    let vars = c.vars.iter().map(|(x, t)| (x.clone(), c.u.zonk(t))).collect();
    Ok((c.u.zonk(&t), Typing { vars }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::{normalize_program, parse, parse_program};

    #[test]
    fn half_is_list_to_list() {
        let e = parse("fun half lst = case lst of [] -> [] | x1::xs1 -> case xs1 of [] -> [] | x2::xs2 -> let tmp = half xs2 in x1::tmp").unwrap();
        let (t, _) = typecheck(&e).unwrap();
        assert_eq!(t, Ty::fun(Ty::list(Ty::Alpha), Ty::list(Ty::Alpha)));
    }

    #[test]
    fn bool_elements_resolved() {
        let p = parse_program("fun f l = case l of [] -> [] | h::t -> if h then t else t").unwrap();
        let ty = typecheck_program(&normalize_program(&p)).unwrap();
        assert_eq!(ty.of("f"), Some(&Ty::fun(Ty::list(Ty::Bool), Ty::list(Ty::Bool))));
    }

    #[test]
    fn mismatch_reported() {
        let e = parse("fun f x = case x of [] -> true | h::t -> t").unwrap();
        assert!(typecheck(&e).is_err());
    }

    #[test]
    fn pairs() {
        let p = parse_program("fun swap p = case p of (a, b) -> (b, a::[])").unwrap();
        let ty = typecheck_program(&p).unwrap();
        assert_eq!(ty.of("swap"), Some(&Ty::fun(Ty::pair(Ty::Alpha, Ty::Alpha), Ty::pair(Ty::Alpha, Ty::list(Ty::Alpha)))));
    }
}
