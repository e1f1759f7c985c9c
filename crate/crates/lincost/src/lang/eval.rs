use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use num_traits::Zero;

use super::ast::{Expr, Item, Name, Program};
use crate::Rational;

pub const DEFAULT_STEP_BUDGET: u64 = 1_000_000;

#[derive(Clone, Debug)]
pub struct Closure {
    pub env: Env,
    pub self_name: Name,
    pub arg: Name,
    pub body: Arc<Expr>,
}

#[derive(Clone, Debug)]
pub enum Value {
    Bool(bool),
    Nil,
    Cons(Arc<Value>, Arc<Value>),
    Pair(Arc<Value>, Arc<Value>),
    Closure(Arc<Closure>),
}

impl PartialEq for Value {
    /// Structural equality; closures compare by their code and captured values.
    fn eq(&self, other: &Value) -> bool {
        match (self, other) {
            (Value::Bool(a), Value::Bool(b)) => a == b,
            (Value::Nil, Value::Nil) => true,
            (Value::Cons(a, b), Value::Cons(c, d)) | (Value::Pair(a, b), Value::Pair(c, d)) => a == c && b == d,
            (Value::Closure(a), Value::Closure(b)) => {
                a.self_name == b.self_name && a.arg == b.arg && a.body == b.body && a.env.bindings() == b.env.bindings()
            }
            _ => false,
        }
    }
}

impl Value {
    pub fn list(items: impl IntoIterator<Item = Value>) -> Value {
        let items: Vec<Value> = items.into_iter().collect();
        items.into_iter().rev().fold(Value::Nil, |acc, v| Value::Cons(Arc::new(v), Arc::new(acc)))
    }

    pub fn bools(bs: &[bool]) -> Value {
        Value::list(bs.iter().map(|b| Value::Bool(*b)))
    }

    pub fn pair(a: Value, b: Value) -> Value {
        Value::Pair(Arc::new(a), Arc::new(b))
    }

    /// Elements of a list value, or `None` if this is not a list.
    pub fn as_list(&self) -> Option<Vec<&Value>> {
        let mut out = Vec::new();
        let mut cur = self;
        loop {
            match cur {
                Value::Nil => return Some(out),
                Value::Cons(h, t) => {
                    out.push(&**h);
                    cur = t;
                }
                _ => return None,
            }
        }
    }

    pub fn list_len(&self) -> Option<usize> {
        self.as_list().map(|v| v.len())
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Bool(b) => write!(f, "{b}"),
            Value::Pair(a, b) => write!(f, "({a}, {b})"),
            Value::Closure(c) => write!(f, "<fun {}>", c.self_name),
            Value::Nil | Value::Cons(..) => match self.as_list() {
                Some(items) => {
                    write!(f, "[")?;
                    for (i, v) in items.iter().enumerate() {
                        if i > 0 {
                            write!(f, ", ")?;
                        }
                        write!(f, "{v}")?;
                    }
                    write!(f, "]")
                }
                None => write!(f, "<improper list>"),
            },
        }
    }
}

#[derive(Debug)]
enum EnvNode {
    Empty,
    Bind(Name, Value, Env),
}

/// Persistent variable environment.
#[derive(Clone, Debug)]
pub struct Env(Arc<EnvNode>);

impl Default for Env {
    fn default() -> Self {
        Env(Arc::new(EnvNode::Empty))
    }
}

impl Env {
    pub fn new() -> Env {
        Env::default()
    }

    pub fn bind(&self, x: Name, v: Value) -> Env {
        Env(Arc::new(EnvNode::Bind(x, v, self.clone())))
    }

    pub fn lookup(&self, x: &str) -> Option<&Value> {
        let mut cur = &self.0;
        loop {
            match &**cur {
                EnvNode::Empty => return None,
                EnvNode::Bind(y, v, rest) => {
                    if &**y == x {
                        return Some(v);
                    }
                    cur = &rest.0;
                }
            }
        }
    }

    /// Visible bindings, innermost first, without shadowed duplicates.
    pub fn bindings(&self) -> Vec<(Name, Value)> {
        let mut out: Vec<(Name, Value)> = Vec::new();
        let mut cur = &self.0;
        while let EnvNode::Bind(y, v, rest) = &**cur {
            if !out.iter().any(|(z, _)| z == y) {
                out.push((y.clone(), v.clone()));
            }
            cur = &rest.0;
        }
        out
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (Name, Value)>) -> Env {
        pairs.into_iter().fold(Env::new(), |env, (x, v)| env.bind(x, v))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum EvalError {
    BudgetExceeded(u64),
    Unbound(Name),
    DynamicType(String),
}

impl fmt::Display for EvalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EvalError::BudgetExceeded(b) => write!(f, "step budget of {b} rule applications exceeded"),
            EvalError::Unbound(x) => write!(f, "unbound variable `{x}`"),
            EvalError::DynamicType(m) => write!(f, "dynamic type error: {m}"),
        }
    }
}

impl std::error::Error for EvalError {}

/// Big-step evaluator with a step budget and a net tick-cost counter.
#[derive(Clone, Debug)]
pub struct Evaluator {
    pub budget: u64,
    pub steps: u64,
    pub cost: Rational,
    globals: Arc<HashMap<Name, Value>>,
}

impl Default for Evaluator {
    fn default() -> Self {
        Evaluator::new(DEFAULT_STEP_BUDGET)
    }
}

impl Evaluator {
    pub fn new(budget: u64) -> Evaluator {
        Evaluator { budget, steps: 0, cost: Rational::zero(), globals: Arc::new(HashMap::new()) }
    }

    /// Evaluator whose free-variable lookups fall back to `globals`.
    pub fn with_globals(budget: u64, globals: Arc<HashMap<Name, Value>>) -> Evaluator {
        Evaluator { budget, steps: 0, cost: Rational::zero(), globals }
    }

    fn step(&mut self) -> Result<(), EvalError> {
        self.steps += 1;
        if self.steps > self.budget {
            return Err(EvalError::BudgetExceeded(self.budget));
        }
        Ok(())
    }

    fn get(&self, env: &Env, x: &Name) -> Result<Value, EvalError> {
        env.lookup(x)
            .or_else(|| self.globals.get(x))
            .cloned()
            .ok_or_else(|| EvalError::Unbound(x.clone()))
    }

    pub fn eval(&mut self, env: &Env, e: &Expr) -> Result<Value, EvalError> {
        self.step()?;
        match e {
            Expr::Bool(b) => Ok(Value::Bool(*b)),
            Expr::Nil => Ok(Value::Nil),
            Expr::Var(x) => self.get(env, x),
            Expr::Cons(h, t) => {
                let h = self.eval(env, h)?;
                let t = self.eval(env, t)?;
                Ok(Value::Cons(Arc::new(h), Arc::new(t)))
            }
            Expr::Pair(a, b) => {
                let a = self.eval(env, a)?;
                let b = self.eval(env, b)?;
                Ok(Value::pair(a, b))
            }
            Expr::If(b, e1, e2) => match self.eval(env, b)? {
                Value::Bool(true) => self.eval(env, e1),
                Value::Bool(false) => self.eval(env, e2),
                v => Err(EvalError::DynamicType(format!("condition is not a Bool: {v}"))),
            },
            Expr::CaseList { scrut, nil, head, tail, cons } => match self.eval(env, scrut)? {
                Value::Nil => self.eval(env, nil),
                Value::Cons(h, t) => {
                    let env = env.bind(head.clone(), (*h).clone()).bind(tail.clone(), (*t).clone());
                    self.eval(&env, cons)
                }
                v => Err(EvalError::DynamicType(format!("case on a non-list: {v}"))),
            },
            Expr::CasePair { scrut, left, right, body } => match self.eval(env, scrut)? {
                Value::Pair(a, b) => {
                    let env = env.bind(left.clone(), (*a).clone()).bind(right.clone(), (*b).clone());
                    self.eval(&env, body)
                }
                v => Err(EvalError::DynamicType(format!("pair case on a non-pair: {v}"))),
            },
            Expr::Let(x, e1, e2) => {
                let v = self.eval(env, e1)?;
                self.eval(&env.bind(x.clone(), v), e2)
            }
            Expr::Fun(f, x, body) => Ok(self.close(env, f, x, body)),
            Expr::App(fe, xe) => {
                let fv = self.eval(env, fe)?;
                let xv = self.eval(env, xe)?;
                self.apply(&fv, xv)
            }
            Expr::Tick(q, e) => {
                self.cost += q;
                self.eval(env, e)
            }
        }
    }

    fn close(&self, env: &Env, f: &Name, x: &Name, body: &Expr) -> Value {
        let mut free = Expr::Fun(f.clone(), x.clone(), Box::new(Expr::Nil)).free_vars();
        free.extend(body.free_vars());
        free.remove(f);
        free.remove(x);
        let captured = free.iter().filter_map(|y| env.lookup(y).map(|v| (y.clone(), v.clone())));
        Value::Closure(Arc::new(Closure {
            env: Env::from_pairs(captured),
            self_name: f.clone(),
            arg: x.clone(),
            body: Arc::new(body.clone()),
        }))
    }

    pub fn apply(&mut self, fv: &Value, arg: Value) -> Result<Value, EvalError> {
        match fv {
            Value::Closure(c) => {
                self.step()?;
                let env = c.env.bind(c.self_name.clone(), fv.clone()).bind(c.arg.clone(), arg);
                let body = c.body.clone();
                self.eval(&env, &body)
            }
            v => Err(EvalError::DynamicType(format!("application of a non-function: {v}"))),
        }
    }
}

/// Evaluates `e` under `env` with the default budget.
pub fn evaluate(env: &Env, e: &Expr) -> Result<Value, EvalError> {
    Evaluator::default().eval(env, e)
}

/// Like [`evaluate`] but also returns the net cost of the ticks executed.
pub fn evaluate_with_cost(env: &Env, e: &Expr, budget: u64) -> Result<(Value, Rational), EvalError> {
    let mut ev = Evaluator::new(budget);
    let v = ev.eval(env, e)?;
    Ok((v, ev.cost))
}

/// Reads a closed data literal such as `[(true, []), (false, [true])]`.
pub fn parse_value(src: &str) -> Result<Value, String> {
    let e = super::parse(src).map_err(|e| e.to_string())?;
    if let Some(x) = e.free_vars().into_iter().next() {
        return Err(format!("unbound variable `{x}` in value"));
    }
    let v = evaluate(&Env::new(), &e).map_err(|e| e.to_string())?;
    if matches!(v, Value::Closure(_)) {
        return Err("a value must be data, not a function".into());
    }
    Ok(v)
}

/// Runtime image of a program: its top-level values.
#[derive(Clone, Debug)]
pub struct Loaded {
    pub globals: Arc<HashMap<Name, Value>>,
    pub main: Option<Value>,
}

impl Loaded {
    pub fn evaluator(&self, budget: u64) -> Evaluator {
        Evaluator::with_globals(budget, self.globals.clone())
    }

    pub fn get(&self, x: &str) -> Option<&Value> {
        self.globals.get(x)
    }

    /// Calls the top-level function `f` on `arg`, returning the result and net tick cost.
    pub fn call(&self, f: &str, arg: Value, budget: u64) -> Result<(Value, Rational), EvalError> {
        let fv = self.get(f).cloned().ok_or_else(|| EvalError::Unbound(f.into()))?;
        let mut ev = self.evaluator(budget);
        let v = ev.apply(&fv, arg)?;
        Ok((v, ev.cost))
    }
}

/// Evaluates the items of a program in order.
///
/// Top-level functions are closed over nothing and resolve other top-level
/// names through the global table, which makes them mutually visible.
pub fn load(p: &Program, budget: u64) -> Result<Loaded, EvalError> {
    let mut globals: HashMap<Name, Value> = HashMap::new();
    let mut main = None;
    for item in &p.items {
        let mut ev = Evaluator::with_globals(budget, Arc::new(globals.clone()));
        match item {
            Item::Def(n, Expr::Fun(f, x, body)) => {
                let v = Value::Closure(Arc::new(Closure {
                    env: Env::new(),
                    self_name: f.clone(),
                    arg: x.clone(),
                    body: Arc::new((**body).clone()),
                }));
                globals.insert(n.clone(), v);
            }
            Item::Def(n, e) => {
                let v = ev.eval(&Env::new(), e)?;
                globals.insert(n.clone(), v);
            }
            Item::Main(e) => main = Some(ev.eval(&Env::new(), e)?),
        }
    }
    Ok(Loaded { globals: Arc::new(globals), main })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::{let_normalize, parse, parse_program};

    #[test]
    fn half_on_five() {
        let src = "fun half lst = case lst of [] -> [] | x1::xs1 -> case xs1 of [] -> [] | x2::xs2 -> let tmp = half xs2 in x1::tmp";
        let p = parse_program(src).unwrap();
        let l = load(&p, DEFAULT_STEP_BUDGET).unwrap();
        let input = Value::bools(&[true, false, false, true, true]);
        let (v, _) = l.call("half", input, DEFAULT_STEP_BUDGET).unwrap();
        assert_eq!(v, Value::bools(&[true, false]));
    }

    #[test]
    fn id_on_nil() {
        let e = parse("fun id x = case x of [] -> [] | h::t -> let r = id t in h::r").unwrap();
        let f = evaluate(&Env::new(), &e).unwrap();
        let v = Evaluator::default().apply(&f, Value::Nil).unwrap();
        assert_eq!(v, Value::Nil);
    }

    #[test]
    fn non_closure_application() {
        let e = let_normalize(&parse("fun f x = x x").unwrap());
        let f = evaluate(&Env::new(), &e).unwrap();
        let err = Evaluator::default().apply(&f, Value::Bool(true)).unwrap_err();
        assert!(matches!(err, EvalError::DynamicType(_)));
    }

    #[test]
    fn budget_is_explicit() {
        let e = parse("fun loop x = loop x").unwrap();
        let f = evaluate(&Env::new(), &e).unwrap();
        let err = Evaluator::new(1000).apply(&f, Value::Nil).unwrap_err();
        assert_eq!(err, EvalError::BudgetExceeded(1000));
    }

    #[test]
    fn ticks_are_counted() {
        let e = parse("fun id x = case x of [] -> [] | h::t -> tick 1 in let r = id t in h::r").unwrap();
        let f = evaluate(&Env::new(), &e).unwrap();
        let mut ev = Evaluator::default();
        ev.apply(&f, Value::bools(&[true, true, false])).unwrap();
        assert_eq!(ev.cost, Rational::from_integer(3.into()));
    }
}
