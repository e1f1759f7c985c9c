use std::collections::BTreeSet;
use std::sync::Arc;

use crate::Rational;

pub type Name = Arc<str>;

pub fn name(s: &str) -> Name {
    Arc::from(s)
}

/// Expressions of the analyzed language.
///
/// The parser produces nested expressions in every position. After
/// [`let_normalize`](crate::lang::let_normalize) the positions that the core
/// grammar restricts to variables hold [`Expr::Var`]; see [`Expr::is_let_normal`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Expr {
    Bool(bool),
    Var(Name),
    Nil,
    Cons(Box<Expr>, Box<Expr>),
    If(Box<Expr>, Box<Expr>, Box<Expr>),
    CaseList {
        scrut: Box<Expr>,
        nil: Box<Expr>,
        head: Name,
        tail: Name,
        cons: Box<Expr>,
    },
    Pair(Box<Expr>, Box<Expr>),
    CasePair {
        scrut: Box<Expr>,
        left: Name,
        right: Name,
        body: Box<Expr>,
    },
    Let(Name, Box<Expr>, Box<Expr>),
    Fun(Name, Name, Box<Expr>),
    App(Box<Expr>, Box<Expr>),
    Tick(Rational, Box<Expr>),
}

impl Expr {
    pub fn var(s: &str) -> Expr {
        Expr::Var(name(s))
    }

    pub fn as_var(&self) -> Option<&Name> {
        match self {
            Expr::Var(x) => Some(x),
            _ => None,
        }
    }

    pub fn is_let_normal(&self) -> bool {
        let v = |e: &Expr| matches!(e, Expr::Var(_));
        match self {
            Expr::Bool(_) | Expr::Var(_) | Expr::Nil => true,
            Expr::Cons(h, t) => v(h) && v(t),
            Expr::Pair(a, b) => v(a) && v(b),
            Expr::App(f, x) => v(f) && v(x),
            Expr::If(b, e1, e2) => v(b) && e1.is_let_normal() && e2.is_let_normal(),
            Expr::CaseList { scrut, nil, cons, .. } => {
                v(scrut) && nil.is_let_normal() && cons.is_let_normal()
            }
            Expr::CasePair { scrut, body, .. } => v(scrut) && body.is_let_normal(),
            Expr::Let(_, e1, e2) => e1.is_let_normal() && e2.is_let_normal(),
            Expr::Fun(_, _, body) => body.is_let_normal(),
            Expr::Tick(_, e) => e.is_let_normal(),
        }
    }

    pub fn free_vars(&self) -> BTreeSet<Name> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut Vec::new(), &mut out);
        out
    }

    fn collect_free(&self, bound: &mut Vec<Name>, out: &mut BTreeSet<Name>) {
        match self {
            Expr::Bool(_) | Expr::Nil => {}
            Expr::Var(x) => {
                if !bound.contains(x) {
                    out.insert(x.clone());
                }
            }
            Expr::Cons(a, b) | Expr::Pair(a, b) | Expr::App(a, b) => {
                a.collect_free(bound, out);
                b.collect_free(bound, out);
            }
            Expr::If(b, e1, e2) => {
                b.collect_free(bound, out);
                e1.collect_free(bound, out);
                e2.collect_free(bound, out);
            }
            Expr::CaseList { scrut, nil, head, tail, cons } => {
                scrut.collect_free(bound, out);
                nil.collect_free(bound, out);
                bound.push(head.clone());
                bound.push(tail.clone());
                cons.collect_free(bound, out);
                bound.truncate(bound.len() - 2);
            }
            Expr::CasePair { scrut, left, right, body } => {
                scrut.collect_free(bound, out);
                bound.push(left.clone());
                bound.push(right.clone());
                body.collect_free(bound, out);
                bound.truncate(bound.len() - 2);
            }
            Expr::Let(x, e1, e2) => {
                e1.collect_free(bound, out);
                bound.push(x.clone());
                e2.collect_free(bound, out);
                bound.pop();
            }
            Expr::Fun(f, x, body) => {
                bound.push(f.clone());
                bound.push(x.clone());
                body.collect_free(bound, out);
                bound.truncate(bound.len() - 2);
            }
            Expr::Tick(_, e) => e.collect_free(bound, out),
        }
    }

    /// Number of AST nodes.
    pub fn size(&self) -> usize {
        1 + match self {
            Expr::Bool(_) | Expr::Var(_) | Expr::Nil => 0,
            Expr::Cons(a, b) | Expr::Pair(a, b) | Expr::App(a, b) => a.size() + b.size(),
            Expr::If(b, e1, e2) => b.size() + e1.size() + e2.size(),
            Expr::CaseList { scrut, nil, cons, .. } => scrut.size() + nil.size() + cons.size(),
            Expr::CasePair { scrut, body, .. } => scrut.size() + body.size(),
            Expr::Let(_, e1, e2) => e1.size() + e2.size(),
            Expr::Fun(_, _, body) => body.size(),
            Expr::Tick(_, e) => e.size(),
        }
    }
}

/// A top-level item: `fun f x = e`, `let x = e`, or a trailing main expression.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Item {
    Def(Name, Expr),
    Main(Expr),
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Program {
    pub items: Vec<Item>,
    /// Types imposed on binders during typechecking. [`Ty::Alpha`] stands for
    /// any type.
    pub hints: Vec<(Name, super::Ty)>,
}

impl Program {
    pub fn defs(&self) -> impl Iterator<Item = (&Name, &Expr)> {
        self.items.iter().filter_map(|it| match it {
            Item::Def(n, e) => Some((n, e)),
            Item::Main(_) => None,
        })
    }

    pub fn main(&self) -> Option<&Expr> {
        self.items.iter().find_map(|it| match it {
            Item::Main(e) => Some(e),
            Item::Def(..) => None,
        })
    }

    pub fn exprs(&self) -> impl Iterator<Item = &Expr> {
        self.items.iter().map(|it| match it {
            Item::Def(_, e) | Item::Main(e) => e,
        })
    }

    pub fn is_let_normal(&self) -> bool {
        self.exprs().all(Expr::is_let_normal)
    }
}
