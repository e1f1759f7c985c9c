use std::collections::HashSet;

use super::ast::{name, Expr, Item, Name, Program};

struct Normalizer {
    next: usize,
    seen: HashSet<Name>,
    scope: Vec<(Name, Name)>,
}

type Bindings = Vec<(Name, Expr)>;

fn wrap(bs: Bindings, body: Expr) -> Expr {
    bs.into_iter().rev().fold(body, |acc, (x, e)| Expr::Let(x, Box::new(e), Box::new(acc)))
}

fn max_generated(e: &Expr, acc: &mut usize) {
    let mut see = |x: &Name| {
        if let Some(n) = x.strip_prefix('%').and_then(|s| s.parse::<usize>().ok()) {
            *acc = (*acc).max(n + 1);
        }
    };
    match e {
        Expr::Bool(_) | Expr::Nil => {}
        Expr::Var(x) => see(x),
        Expr::Cons(a, b) | Expr::Pair(a, b) | Expr::App(a, b) => {
            max_generated(a, acc);
            max_generated(b, acc);
        }
        Expr::If(b, e1, e2) => {
            max_generated(b, acc);
            max_generated(e1, acc);
            max_generated(e2, acc);
        }
        Expr::CaseList { scrut, nil, head, tail, cons } => {
            see(head);
            see(tail);
            max_generated(scrut, acc);
            max_generated(nil, acc);
            max_generated(cons, acc);
        }
        Expr::CasePair { scrut, left, right, body } => {
            see(left);
            see(right);
            max_generated(scrut, acc);
            max_generated(body, acc);
        }
        Expr::Let(x, e1, e2) => {
            see(x);
            max_generated(e1, acc);
            max_generated(e2, acc);
        }
        Expr::Fun(f, x, body) => {
            see(f);
            see(x);
            max_generated(body, acc);
        }
        Expr::Tick(_, e) => max_generated(e, acc),
    }
}

impl Normalizer {
    fn fresh(&mut self) -> Name {
        let n = name(&format!("%{}", self.next));
        self.next += 1;
        self.seen.insert(n.clone());
        n
    }

    fn bind(&mut self, x: &Name) -> Name {
        let y = if self.seen.contains(x) { self.fresh() } else { x.clone() };
        self.seen.insert(y.clone());
        self.scope.push((x.clone(), y.clone()));
        y
    }

    fn lookup(&self, x: &Name) -> Name {
        self.scope.iter().rev().find(|(s, _)| s == x).map(|(_, t)| t.clone()).unwrap_or_else(|| x.clone())
    }

    fn norm(&mut self, e: &Expr) -> Expr {
        match e {
            Expr::Let(x, e1, e2) => {
                let e1 = self.norm(e1);
                let mark = self.scope.len();
                let x = self.bind(x);
                let e2 = self.norm(e2);
                self.scope.truncate(mark);
                Expr::Let(x, Box::new(e1), Box::new(e2))
            }
            _ => {
                let mut bs = Vec::new();
                let r = self.flat(e, &mut bs);
                wrap(bs, r)
            }
        }
    }

    /// Hoists bindings for subterms in variable positions into `bs` and
    /// returns the remaining non-`let` expression.
    fn flat(&mut self, e: &Expr, bs: &mut Bindings) -> Expr {
        match e {
            Expr::Bool(_) | Expr::Nil => e.clone(),
            Expr::Var(x) => Expr::Var(self.lookup(x)),
            Expr::Cons(h, t) => {
                let h = self.atom(h, bs);
                let t = self.atom(t, bs);
                Expr::Cons(Box::new(h), Box::new(t))
            }
            Expr::Pair(a, b) => {
                let a = self.atom(a, bs);
                let b = self.atom(b, bs);
                Expr::Pair(Box::new(a), Box::new(b))
            }
            Expr::App(f, x) => {
                let f = self.atom(f, bs);
                let x = self.atom(x, bs);
                Expr::App(Box::new(f), Box::new(x))
            }
            Expr::If(b, e1, e2) => {
                let b = self.atom(b, bs);
                let e1 = self.scoped(e1);
                let e2 = self.scoped(e2);
                Expr::If(Box::new(b), Box::new(e1), Box::new(e2))
            }
            Expr::CaseList { scrut, nil, head, tail, cons } => {
                let scrut = self.atom(scrut, bs);
                let nil = self.scoped(nil);
                let mark = self.scope.len();
                let head = self.bind(head);
                let tail = self.bind(tail);
                let cons = self.norm(cons);
                self.scope.truncate(mark);
                Expr::CaseList { scrut: Box::new(scrut), nil: Box::new(nil), head, tail, cons: Box::new(cons) }
            }
            Expr::CasePair { scrut, left, right, body } => {
                let scrut = self.atom(scrut, bs);
                let mark = self.scope.len();
                let left = self.bind(left);
                let right = self.bind(right);
                let body = self.norm(body);
                self.scope.truncate(mark);
                Expr::CasePair { scrut: Box::new(scrut), left, right, body: Box::new(body) }
            }
            Expr::Let(x, e1, e2) => {
                let r1 = self.flat(e1, bs);
                let mark = self.scope.len();
                let x = self.bind(x);
                bs.push((x, r1));
                let r = self.flat(e2, bs);
                self.scope.truncate(mark);
                r
            }
            Expr::Fun(f, x, body) => {
                let mark = self.scope.len();
                let f = self.bind(f);
                let x = self.bind(x);
                let body = self.norm(body);
                self.scope.truncate(mark);
                Expr::Fun(f, x, Box::new(body))
            }
            Expr::Tick(q, e) => Expr::Tick(q.clone(), Box::new(self.scoped(e))),
        }
    }

    fn scoped(&mut self, e: &Expr) -> Expr {
        let mark = self.scope.len();
        let r = self.norm(e);
        self.scope.truncate(mark);
        r
    }

    fn atom(&mut self, e: &Expr, bs: &mut Bindings) -> Expr {
        let r = self.flat(e, bs);
        if matches!(r, Expr::Var(_)) {
            return r;
        }
        let x = self.fresh();
        bs.push((x.clone(), r));
        Expr::Var(x)
    }
}

/// Converts an expression to let-normal form.
///
/// Subterms in positions restricted to variables are bound to fresh names
/// `%n`; binders that would shadow another binder are renamed the same way,
/// so every binder of the result is distinct.
pub fn let_normalize(e: &Expr) -> Expr {
    let mut next = 0;
    max_generated(e, &mut next);
    let mut n = Normalizer { next, seen: e.free_vars().into_iter().collect(), scope: Vec::new() };
    n.scoped(e)
}

/// Let-normalizes every item of a program. Top-level names are kept.
pub fn normalize_program(p: &Program) -> Program {
    let mut next = 0;
    for e in p.exprs() {
        max_generated(e, &mut next);
    }
    let mut seen: HashSet<Name> = p.defs().map(|(n, _)| n.clone()).collect();
    for e in p.exprs() {
        seen.extend(e.free_vars());
    }
    let mut n = Normalizer { next, seen, scope: Vec::new() };
    let items = p
        .items
        .iter()
        .map(|item| match item {
            Item::Def(g, Expr::Fun(f, x, body)) if f == g => {
                let mark = n.scope.len();
                n.scope.push((f.clone(), f.clone()));
                let x = n.bind(x);
                let body = n.norm(body);
                n.scope.truncate(mark);
                Item::Def(g.clone(), Expr::Fun(f.clone(), x, Box::new(body)))
            }
            Item::Def(g, e) => Item::Def(g.clone(), n.scoped(e)),
            Item::Main(e) => Item::Main(n.scoped(e)),
        })
        .collect();
    Program { items, hints: p.hints.clone() }
}


impl Item {
    pub fn into_expr(self) -> Expr {
        match self {
            Item::Def(_, e) | Item::Main(e) => e,
        }
    }
}
