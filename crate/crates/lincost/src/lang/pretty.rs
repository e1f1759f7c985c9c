use std::fmt::Write;

use super::ast::{Expr, Item, Program};
use crate::Rational;

#[derive(Clone, Copy, PartialEq)]
enum Pos {
    /// May extend to the right as far as the enclosing construct allows.
    Tail,
    /// Left of `::`, function position, or argument of an application.
    Operand,
    Arg,
}

fn rat(q: &Rational) -> String {
    if q.is_integer() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

fn go(e: &Expr, pos: Pos, out: &mut String) {
    let keyword_form = matches!(
        e,
        Expr::Let(..) | Expr::Fun(..) | Expr::If(..) | Expr::CaseList { .. } | Expr::CasePair { .. } | Expr::Tick(..)
    );
    let wrap = match pos {
        Pos::Tail => false,
        Pos::Operand => keyword_form || matches!(e, Expr::Cons(..)),
        Pos::Arg => keyword_form || matches!(e, Expr::Cons(..) | Expr::App(..)),
    };
    if wrap {
        out.push('(');
        go(e, Pos::Tail, out);
        out.push(')');
        return;
    }
    match e {
        Expr::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Expr::Var(x) => out.push_str(x),
        Expr::Nil => out.push_str("[]"),
        Expr::Cons(h, t) => {
            go(h, Pos::Operand, out);
            out.push_str("::");
            go(t, if matches!(**t, Expr::Cons(..)) { Pos::Tail } else { Pos::Operand }, out);
        }
        Expr::Pair(a, b) => {
            out.push('(');
            go(a, Pos::Tail, out);
            out.push_str(", ");
            go(b, Pos::Tail, out);
            out.push(')');
        }
        Expr::App(f, x) => {
            go(f, if matches!(**f, Expr::App(..)) { Pos::Tail } else { Pos::Arg }, out);
            out.push(' ');
            go(x, Pos::Arg, out);
        }
        Expr::If(b, e1, e2) => {
            out.push_str("if ");
            go(b, Pos::Tail, out);
            out.push_str(" then ");
            go(e1, Pos::Tail, out);
            out.push_str(" else ");
            go(e2, Pos::Tail, out);
        }
        Expr::CaseList { scrut, nil, head, tail, cons } => {
            out.push_str("case ");
            go(scrut, Pos::Tail, out);
            out.push_str(" of [] -> ");
            // A pair case in the nil branch would swallow the cons alternative.
            go(nil, if matches!(**nil, Expr::CasePair { .. }) { Pos::Operand } else { Pos::Tail }, out);
            let _ = write!(out, " | {head}::{tail} -> ");
            go(cons, Pos::Tail, out);
        }
        Expr::CasePair { scrut, left, right, body } => {
            out.push_str("case ");
            go(scrut, Pos::Tail, out);
            let _ = write!(out, " of ({left}, {right}) -> ");
            go(body, Pos::Tail, out);
        }
        Expr::Let(x, e1, e2) => {
            let _ = write!(out, "let {x} = ");
            go(e1, Pos::Tail, out);
            out.push_str(" in ");
            go(e2, Pos::Tail, out);
        }
        Expr::Fun(f, x, body) => {
            let _ = write!(out, "fun {f} {x} = ");
            go(body, Pos::Tail, out);
        }
        Expr::Tick(q, e) => {
            let _ = write!(out, "tick {} in ", rat(q));
            go(e, Pos::Tail, out);
        }
    }
}

/// Canonical single-line rendering of an expression.
pub fn pretty(e: &Expr) -> String {
    let mut out = String::new();
    go(e, Pos::Tail, &mut out);
    out
}

/// Canonical rendering of a program, one item per line.
pub fn pretty_program(p: &Program) -> String {
    let mut out = String::new();
    for item in &p.items {
        match item {
            Item::Def(n, e @ Expr::Fun(f, _, _)) if f == n => out.push_str(&pretty(e)),
            Item::Def(n, e) => {
                let _ = write!(out, "let {n} = {}", pretty(e));
            }
            Item::Main(e) => out.push_str(&pretty(e)),
        }
        out.push('\n');
    }
    out
}
