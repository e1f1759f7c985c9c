use std::collections::{HashMap, HashSet};

use crate::lang::{Expr, Item, Name, Program, Ty, Value};
use crate::potential::Basis;

use super::derive::CFType;
use super::infer::{Analysis, InferConfig};

/// `α` is compatible with every type.
fn compatible(a: &Ty, b: &Ty) -> bool {
    match (a, b) {
        (Ty::Alpha, _) | (_, Ty::Alpha) => true,
        (Ty::Bool, Ty::Bool) => true,
        (Ty::List(x), Ty::List(y)) => compatible(x, y),
        (Ty::Pair(a1, b1), Ty::Pair(a2, b2)) | (Ty::Fun(a1, b1), Ty::Fun(a2, b2)) => compatible(a1, a2) && compatible(b1, b2),
        _ => false,
    }
}

fn literal(v: &Value) -> Option<Expr> {
    Some(match v {
        Value::Bool(b) => Expr::Bool(*b),
        Value::Nil => Expr::Nil,
        Value::Cons(h, t) => Expr::Cons(Box::new(literal(h)?), Box::new(literal(t)?)),
        Value::Pair(a, b) => Expr::Pair(Box::new(literal(a)?), Box::new(literal(b)?)),
        Value::Closure(_) => return None,
    })
}

/// Rebuilds a closure and everything it captures as top-level definitions.
struct Rebuild<'a> {
    globals: &'a HashMap<Name, Value>,
    bound: HashMap<Name, Value>,
    values: Vec<Item>,
    funs: Vec<Item>,
    visiting: HashSet<Name>,
}

impl Rebuild<'_> {
    fn bind(&mut self, x: &Name, v: &Value) -> bool {
        if let Some(old) = self.bound.get(x) {
            return old == v;
        }
        self.bound.insert(x.clone(), v.clone());
        match v {
            Value::Closure(c) => self.closure(x, c),
            _ => match literal(v) {
                Some(e) => {
                    self.values.push(Item::Def(x.clone(), e));
                    true
                }
                None => false,
            },
        }
    }

    fn closure(&mut self, x: &Name, c: &crate::lang::Closure) -> bool {
        if !self.visiting.insert(x.clone()) {
            return true;
        }
        let code = Expr::Fun(c.self_name.clone(), c.arg.clone(), Box::new((*c.body).clone()));
        for y in code.free_vars() {
            let v = match c.env.lookup(&y).or_else(|| self.globals.get(&y)) {
                Some(v) => v.clone(),
                None => return false,
            };
            if !self.bind(&y, &v) {
                return false;
            }
        }
        if *x == c.self_name {
            self.funs.push(Item::Def(x.clone(), code));
        } else {
            self.funs.push(Item::Def(c.self_name.clone(), code));
            self.funs.push(Item::Def(x.clone(), Expr::Var(c.self_name.clone())));
        }
        true
    }
}

fn wf_data(v: &Value, t: &CFType) -> bool {
    match (t, v) {
        (CFType::Alpha, Value::Closure(_)) => false,
        (CFType::Alpha, _) | (CFType::Bool, Value::Bool(_)) | (CFType::List(_), Value::Nil) => true,
        (CFType::List(e), Value::Cons(h, tl)) => wf_data(h, e) && wf_data(tl, t),
        (CFType::Pair(a, b), Value::Pair(x, y)) => wf_data(x, a) && wf_data(y, b),
        _ => false,
    }
}

/// Whether `v` is well formed at `t`; see [`check_wf_with`].
pub fn check_wf(v: &Value, t: &CFType, basis: Basis) -> bool {
    check_wf_with(v, t, basis, &HashMap::new())
}

/// Whether `v` is well formed at `t`, resolving free names of closures in `globals`.
///
/// Data values are checked structurally. A closure is well formed at
/// `τ → σ [M]` when its code checks against `M` in a context built from its
/// captured values, with the matrices of captured closures inferred. A
/// function type without a matrix accepts any closure whose code infers.
pub fn check_wf_with(v: &Value, t: &CFType, basis: Basis, globals: &HashMap<Name, Value>) -> bool {
    let (c, m) = match (t, v) {
        (CFType::Fun(_, _, m), Value::Closure(c)) => (c, m),
        (CFType::Fun(..), _) => return false,
        _ => return wf_data(v, t),
    };
    let mut rb = Rebuild { globals, bound: HashMap::new(), values: Vec::new(), funs: Vec::new(), visiting: HashSet::new() };
    let f = c.self_name.clone();
    rb.bound.insert(f.clone(), v.clone());
    if !rb.closure(&f, c) {
        return false;
    }
    let mut items = rb.values;
    items.extend(rb.funs);
    let a = match Analysis::new(&Program { items, hints: Vec::new() }) {
        Ok(a) => a,
        Err(_) => return false,
    };
    match a.typing.of(&f) {
        Some(ty) if compatible(ty, &t.ty()) => {}
        _ => return false,
    }
    let cfg = InferConfig::new(basis);
    let report = match m {
        Some(m) => a.check_function(&f, m, &cfg),
        None => a.infer_function(&f, &cfg),
    };
    report.is_ok_and(|r| r.status.is_success())
}
