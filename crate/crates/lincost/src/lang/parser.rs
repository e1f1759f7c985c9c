use std::collections::HashSet;
use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Zero};

use super::ast::{name, Expr, Item, Name, Program};
use crate::Rational;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub msg: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.col, self.msg)
    }
}

impl std::error::Error for ParseError {}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Num(Rational),
    Kw(&'static str),
    Sym(&'static str),
    Eof,
}

const KEYWORDS: &[&str] = &[
    "fun", "let", "in", "if", "then", "else", "case", "of", "true", "false", "tick",
];

const SYMBOLS: &[&str] = &["::", "->", "[]", "=", "|", "(", ")", ",", "[", "]"];

struct Lexed {
    tok: Tok,
    line: usize,
    col: usize,
}

fn lex(src: &str) -> Result<Vec<Lexed>, ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    let err = |line, col, msg: String| ParseError { line, col, msg };
    macro_rules! bump {
        () => {{
            if chars[i] == '\n' {
                line += 1;
                col = 1;
            } else {
                col += 1;
            }
            i += 1;
        }};
    }
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            bump!();
            continue;
        }
        if c == '(' && chars.get(i + 1) == Some(&'*') {
            let (sl, sc) = (line, col);
            let mut depth = 0usize;
            loop {
                if i >= chars.len() {
                    return Err(err(sl, sc, "unterminated comment".into()));
                }
                if chars[i] == '(' && chars.get(i + 1) == Some(&'*') {
                    depth += 1;
                    bump!();
                    bump!();
                } else if chars[i] == '*' && chars.get(i + 1) == Some(&')') {
                    depth -= 1;
                    bump!();
                    bump!();
                    if depth == 0 {
                        break;
                    }
                } else {
                    bump!();
                }
            }
            continue;
        }
        let (sl, sc) = (line, col);
        if c.is_ascii_alphabetic() || c == '_' {
            let mut s = String::new();
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_' || chars[i] == '\'') {
                s.push(chars[i]);
                bump!();
            }
            if i < chars.len() && chars[i] == '%' {
                return Err(err(line, col, "`%` is reserved for generated names".into()));
            }
            let tok = match KEYWORDS.iter().find(|k| **k == s) {
                Some(k) => Tok::Kw(k),
                None => Tok::Ident(s),
            };
            out.push(Lexed { tok, line: sl, col: sc });
            continue;
        }
        let neg = c == '-' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit());
        if c.is_ascii_digit() || neg {
            let mut s = String::new();
            if neg {
                s.push('-');
                bump!();
            }
            while i < chars.len() && chars[i].is_ascii_digit() {
                s.push(chars[i]);
                bump!();
            }
            let numer: BigInt = s.parse().expect("digits");
            let mut denom = BigInt::one();
            if i < chars.len() && chars[i] == '/' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit()) {
                bump!();
                let mut d = String::new();
                while i < chars.len() && chars[i].is_ascii_digit() {
                    d.push(chars[i]);
                    bump!();
                }
                denom = d.parse().expect("digits");
                if denom.is_zero() {
                    return Err(err(sl, sc, "zero denominator".into()));
                }
            }
            out.push(Lexed { tok: Tok::Num(Rational::new(numer, denom)), line: sl, col: sc });
            continue;
        }
        let rest: String = chars[i..chars.len().min(i + 2)].iter().collect();
        match SYMBOLS.iter().find(|s| rest.starts_with(**s)) {
            Some(s) => {
                for _ in 0..s.len() {
                    bump!();
                }
                out.push(Lexed { tok: Tok::Sym(s), line: sl, col: sc });
            }
            None => return Err(err(sl, sc, format!("unexpected character `{c}`"))),
        }
    }
    out.push(Lexed { tok: Tok::Eof, line, col });
    Ok(out)
}

struct Parser {
    toks: Vec<Lexed>,
    pos: usize,
    scope: Vec<Name>,
    globals_used: Vec<(Name, usize, usize)>,
}

enum Alt {
    Nil(Expr),
    Cons(Name, Name, Expr),
    Pair(Name, Name, Expr),
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].tok
    }

    fn error<T>(&self, msg: impl Into<String>) -> Result<T, ParseError> {
        let t = &self.toks[self.pos];
        let msg = msg.into();
        let msg = if t.tok == Tok::Eof { format!("{msg} at end of input") } else { msg };
        Err(ParseError { line: t.line, col: t.col, msg })
    }

    fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Sym(x) if *x == s)
    }

    fn is_kw(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Kw(x) if *x == s)
    }

    fn expect_sym(&mut self, s: &str) -> Result<(), ParseError> {
        if self.is_sym(s) {
            self.pos += 1;
            Ok(())
        } else {
            self.error(format!("expected `{s}`"))
        }
    }

    fn expect_kw(&mut self, s: &str) -> Result<(), ParseError> {
        if self.is_kw(s) {
            self.pos += 1;
            Ok(())
        } else {
            self.error(format!("expected `{s}`"))
        }
    }

    fn ident(&mut self) -> Result<Name, ParseError> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.pos += 1;
                Ok(name(&s))
            }
            _ => self.error("expected identifier"),
        }
    }

    fn with_bound<T>(&mut self, names: &[Name], f: impl FnOnce(&mut Self) -> Result<T, ParseError>) -> Result<T, ParseError> {
        let n = self.scope.len();
        self.scope.extend(names.iter().cloned());
        let r = f(self);
        self.scope.truncate(n);
        r
    }

    fn program(&mut self) -> Result<Program, ParseError> {
        let mut items = Vec::new();
        loop {
            if *self.peek() == Tok::Eof {
                break;
            }
            if items.iter().any(|i| matches!(i, Item::Main(_))) {
                return self.error("unexpected input after main expression");
            }
            if self.is_kw("fun") && matches!(self.peek_at(1), Tok::Ident(_)) && matches!(self.peek_at(2), Tok::Ident(_)) {
                let e = self.fun_expr()?;
                let Expr::Fun(f, _, _) = &e else { unreachable!() };
                let f = f.clone();
                if self.is_kw("in") {
                    // `fun f x = e in ...` is not an item; treat as an expression head.
                    return self.error("unexpected `in`");
                }
                items.push(Item::Def(f, e));
                continue;
            }
            if self.is_kw("let") {
                let save = self.pos;
                self.pos += 1;
                let x = self.ident()?;
                self.expect_sym("=")?;
                let bound = self.expr()?;
                if self.is_kw("in") {
                    self.pos = save;
                    let e = self.expr()?;
                    items.push(Item::Main(e));
                } else {
                    items.push(Item::Def(x, bound));
                }
                continue;
            }
            let e = self.expr()?;
            items.push(Item::Main(e));
        }
        Ok(Program { items, hints: Vec::new() })
    }

    fn fun_expr(&mut self) -> Result<Expr, ParseError> {
        self.expect_kw("fun")?;
        let f = self.ident()?;
        let x = self.ident()?;
        self.expect_sym("=")?;
        let body = self.with_bound(&[f.clone(), x.clone()], |p| p.expr())?;
        Ok(Expr::Fun(f, x, Box::new(body)))
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        match self.peek() {
            Tok::Kw("let") => {
                self.pos += 1;
                let x = self.ident()?;
                self.expect_sym("=")?;
                let e1 = self.expr()?;
                self.expect_kw("in")?;
                let e2 = self.with_bound(&[x.clone()], |p| p.expr())?;
                Ok(Expr::Let(x, Box::new(e1), Box::new(e2)))
            }
            Tok::Kw("fun") => self.fun_expr(),
            Tok::Kw("if") => {
                self.pos += 1;
                let b = self.expr()?;
                self.expect_kw("then")?;
                let e1 = self.expr()?;
                self.expect_kw("else")?;
                let e2 = self.expr()?;
                Ok(Expr::If(Box::new(b), Box::new(e1), Box::new(e2)))
            }
            Tok::Kw("tick") => {
                self.pos += 1;
                let q = match self.peek().clone() {
                    Tok::Num(q) => q,
                    _ => return self.error("expected a rational cost"),
                };
                self.pos += 1;
                self.expect_kw("in")?;
                let e = self.expr()?;
                Ok(Expr::Tick(q, Box::new(e)))
            }
            Tok::Kw("case") => self.case_expr(),
            _ => self.cons_expr(),
        }
    }

    fn case_expr(&mut self) -> Result<Expr, ParseError> {
        self.expect_kw("case")?;
        let scrut = self.expr()?;
        self.expect_kw("of")?;
        if self.is_sym("|") {
            self.pos += 1;
        }
        let first = self.alt()?;
        if let Alt::Pair(l, r, body) = first {
            return Ok(Expr::CasePair { scrut: Box::new(scrut), left: l, right: r, body: Box::new(body) });
        }
        self.expect_sym("|")?;
        let second = self.alt()?;
        match (first, second) {
            (Alt::Nil(n), Alt::Cons(h, t, c)) | (Alt::Cons(h, t, c), Alt::Nil(n)) => Ok(Expr::CaseList {
                scrut: Box::new(scrut),
                nil: Box::new(n),
                head: h,
                tail: t,
                cons: Box::new(c),
            }),
            _ => self.error("a list case needs one `[]` and one `h::t` alternative"),
        }
    }

    fn alt(&mut self) -> Result<Alt, ParseError> {
        if self.is_sym("[]") {
            self.pos += 1;
            self.expect_sym("->")?;
            return Ok(Alt::Nil(self.expr()?));
        }
        if self.is_sym("(") {
            self.pos += 1;
            let l = self.ident()?;
            self.expect_sym(",")?;
            let r = self.ident()?;
            self.expect_sym(")")?;
            self.expect_sym("->")?;
            let body = self.with_bound(&[l.clone(), r.clone()], |p| p.expr())?;
            return Ok(Alt::Pair(l, r, body));
        }
        let h = self.ident()?;
        self.expect_sym("::")?;
        let t = self.ident()?;
        self.expect_sym("->")?;
        let body = self.with_bound(&[h.clone(), t.clone()], |p| p.expr())?;
        Ok(Alt::Cons(h, t, body))
    }

    fn starts_keyword_expr(&self) -> bool {
        matches!(self.peek(), Tok::Kw("let" | "fun" | "if" | "case" | "tick"))
    }

    fn cons_expr(&mut self) -> Result<Expr, ParseError> {
        let head = self.app_expr()?;
        if self.is_sym("::") {
            self.pos += 1;
            let tail = if self.starts_keyword_expr() { self.expr()? } else { self.cons_expr()? };
            return Ok(Expr::Cons(Box::new(head), Box::new(tail)));
        }
        Ok(head)
    }

    fn starts_atom(&self) -> bool {
        matches!(self.peek(), Tok::Ident(_) | Tok::Kw("true" | "false") | Tok::Sym("[]" | "[" | "("))
    }

    fn app_expr(&mut self) -> Result<Expr, ParseError> {
        let mut e = self.atom()?;
        while self.starts_atom() {
            let arg = self.atom()?;
            e = Expr::App(Box::new(e), Box::new(arg));
        }
        Ok(e)
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let t = &self.toks[self.pos];
        let (line, col) = (t.line, t.col);
        match t.tok.clone() {
            Tok::Ident(s) => {
                self.pos += 1;
                let x = name(&s);
                if !self.scope.contains(&x) {
                    self.globals_used.push((x.clone(), line, col));
                }
                Ok(Expr::Var(x))
            }
            Tok::Kw("true") => {
                self.pos += 1;
                Ok(Expr::Bool(true))
            }
            Tok::Kw("false") => {
                self.pos += 1;
                Ok(Expr::Bool(false))
            }
            Tok::Sym("[]") => {
                self.pos += 1;
                Ok(Expr::Nil)
            }
            Tok::Sym("[") => {
                self.pos += 1;
                let mut elems = vec![self.expr()?];
                while self.is_sym(",") {
                    self.pos += 1;
                    elems.push(self.expr()?);
                }
                self.expect_sym("]")?;
                Ok(elems.into_iter().rev().fold(Expr::Nil, |acc, h| Expr::Cons(Box::new(h), Box::new(acc))))
            }
            Tok::Sym("(") => {
                self.pos += 1;
                let e = self.expr()?;
                if self.is_sym(",") {
                    self.pos += 1;
                    let e2 = self.expr()?;
                    self.expect_sym(")")?;
                    return Ok(Expr::Pair(Box::new(e), Box::new(e2)));
                }
                self.expect_sym(")")?;
                Ok(e)
            }
            _ => self.error("expected an expression"),
        }
    }
}

/// Parses a whole program: a sequence of `fun f x = e` and `let x = e`
/// items, optionally followed by one main expression.
///
/// Top-level names are visible in every item (so top-level functions may be
/// mutually recursive); all other variables must be bound lexically.
pub fn parse_program(src: &str) -> Result<Program, ParseError> {
    let toks = lex(src)?;
    let mut p = Parser { toks, pos: 0, scope: Vec::new(), globals_used: Vec::new() };
    let prog = p.program()?;
    let globals: HashSet<Name> = prog.defs().map(|(n, _)| n.clone()).collect();
    if let Some((x, line, col)) = p.globals_used.iter().find(|(x, _, _)| !globals.contains(x)) {
        return Err(ParseError { line: *line, col: *col, msg: format!("unbound variable `{x}`") });
    }
    Ok(prog)
}

/// Parses a single closed expression.
pub fn parse(src: &str) -> Result<Expr, ParseError> {
    let prog = parse_program(src)?;
    match prog.items.as_slice() {
        [Item::Main(e)] => Ok(e.clone()),
        [Item::Def(_, e @ Expr::Fun(..))] => Ok(e.clone()),
        [] => Err(ParseError { line: 1, col: 1, msg: "expected an expression at end of input".into() }),
        _ => Err(ParseError { line: 1, col: 1, msg: "expected a single expression".into() }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn literal() {
        assert_eq!(parse("true").unwrap(), Expr::Bool(true));
    }

    #[test]
    fn truncated_let() {
        let e = parse("let x =").unwrap_err();
        assert!(e.msg.contains("end of input"), "{e}");
    }

    #[test]
    fn unbound() {
        let e = parse("fun f x = y").unwrap_err();
        assert_eq!((e.line, e.col), (1, 11));
        assert!(e.msg.contains("unbound"));
    }

    #[test]
    fn half_shape() {
        let src = "fun half lst = case lst of [] -> [] | x1::xs1 -> case xs1 of [] -> [] | x2::xs2 -> let tmp = half xs2 in x1::tmp";
        let e = parse(src).unwrap();
        let Expr::Fun(f, x, body) = e else { panic!() };
        assert_eq!((&*f, &*x), ("half", "lst"));
        let Expr::CaseList { cons, .. } = *body else { panic!() };
        let Expr::CaseList { cons, .. } = *cons else { panic!() };
        let Expr::Let(t, e1, e2) = *cons else { panic!() };
        assert_eq!(&*t, "tmp");
        assert_eq!(*e1, Expr::App(Box::new(Expr::var("half")), Box::new(Expr::var("xs2"))));
        assert_eq!(*e2, Expr::Cons(Box::new(Expr::var("x1")), Box::new(Expr::var("tmp"))));
    }

    #[test]
    fn alternatives_in_either_order() {
        let a = parse("fun f l = case l of h::t -> t | [] -> l").unwrap();
        let b = parse("fun f l = case l of | [] -> l | h::t -> t").unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn nested_case_takes_two_alternatives() {
        let e = parse("fun f l = case l of [] -> case l of [] -> l | a::b -> b | h::t -> t").unwrap();
        let Expr::Fun(_, _, body) = e else { panic!() };
        assert!(matches!(*body, Expr::CaseList { .. }));
    }

    #[test]
    fn ticks_and_rationals() {
        let e = parse("tick 1/3 in true").unwrap();
        assert_eq!(e, Expr::Tick(Rational::new(1.into(), 3.into()), Box::new(Expr::Bool(true))));
        assert!(matches!(parse("tick -2 in false").unwrap(), Expr::Tick(q, _) if q == Rational::from_integer((-2).into())));
    }

    #[test]
    fn percent_rejected() {
        assert!(parse("fun f x%1 = x").is_err());
    }

    #[test]
    fn list_literal_and_pairs() {
        let e = parse("fun f x = [x, (x, x)]").unwrap();
        let Expr::Fun(_, _, body) = e else { panic!() };
        let Expr::Cons(_, t) = *body else { panic!() };
        let Expr::Cons(p, n) = *t else { panic!() };
        assert!(matches!(*p, Expr::Pair(..)));
        assert_eq!(*n, Expr::Nil);
    }

    #[test]
    fn top_level_items() {
        let p = parse_program("fun a x = b x\nfun b y = y\nlet c = a").unwrap();
        assert_eq!(p.items.len(), 3);
    }
}
