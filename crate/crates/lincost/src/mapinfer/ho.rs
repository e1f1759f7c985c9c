use std::collections::{BTreeMap, HashMap, HashSet};

use crate::lang::{name, normalize_program, typecheck_program, Expr, Item, Name, Program};

use super::infer::AnalysisError;

struct HoDef {
    param: Name,
    inner_self: Name,
    inner_arg: Name,
    inner_body: Expr,
}

fn rename_vars(e: &Expr, map: &HashMap<Name, Name>) -> Expr {
    let r = |e: &Expr| Box::new(rename_vars(e, map));
    match e {
        Expr::Var(x) => Expr::Var(map.get(x).cloned().unwrap_or_else(|| x.clone())),
        Expr::Bool(_) | Expr::Nil => e.clone(),
        Expr::Cons(a, b) => Expr::Cons(r(a), r(b)),
        Expr::Pair(a, b) => Expr::Pair(r(a), r(b)),
        Expr::App(a, b) => Expr::App(r(a), r(b)),
        Expr::If(b, x, y) => Expr::If(r(b), r(x), r(y)),
        Expr::CaseList { scrut, nil, head, tail, cons } => {
            Expr::CaseList { scrut: r(scrut), nil: r(nil), head: head.clone(), tail: tail.clone(), cons: r(cons) }
        }
        Expr::CasePair { scrut, left, right, body } => {
            Expr::CasePair { scrut: r(scrut), left: left.clone(), right: right.clone(), body: r(body) }
        }
        Expr::Let(x, a, b) => Expr::Let(x.clone(), r(a), r(b)),
        Expr::Fun(f, x, b) => Expr::Fun(f.clone(), x.clone(), r(b)),
        Expr::Tick(q, b) => Expr::Tick(q.clone(), r(b)),
    }
}

struct Expander<'a> {
    ho: &'a HashMap<Name, HoDef>,
    /// Local aliases `let x = y`.
    aliases: HashMap<Name, Name>,
    /// First-order top-level functions.
    first_order: HashSet<Name>,
    used: HashSet<Name>,
    specs: BTreeMap<(Name, Name), Name>,
    pending: Vec<(Name, Name, Name)>,
    err: Option<AnalysisError>,
    current: Name,
}

impl Expander<'_> {
    fn resolve(&self, mut x: Name) -> Option<Name> {
        for _ in 0..=self.aliases.len() {
            if self.first_order.contains(&x) {
                return Some(x);
            }
            x = self.aliases.get(&x)?.clone();
        }
        None
    }

    fn spec_name(&mut self, h: &Name, g: &Name) -> Name {
        if let Some(n) = self.specs.get(&(h.clone(), g.clone())) {
            return n.clone();
        }
        let base = format!("{h}_{g}");
        let mut s = base.clone();
        let mut k = 2;
        while self.used.contains(s.as_str()) {
            s = format!("{base}_{k}");
            k += 1;
        }
        let n = name(&s);
        self.used.insert(n.clone());
        self.first_order.insert(n.clone());
        self.specs.insert((h.clone(), g.clone()), n.clone());
        self.pending.push((h.clone(), g.clone(), n.clone()));
        n
    }

    fn rewrite(&mut self, e: &Expr) -> Expr {
        if let Expr::App(f, x) = e {
            if let (Expr::Var(h), Expr::Var(g)) = (&**f, &**x) {
                if self.ho.contains_key(h) {
                    return match self.resolve(g.clone()) {
                        Some(g) => Expr::Var(self.spec_name(h, &g)),
                        None => {
                            self.err.get_or_insert(AnalysisError::HigherOrder { fun: self.current.clone(), var: g.clone() });
                            e.clone()
                        }
                    };
                }
            }
        }
        let mut r = |e: &Expr| Box::new(self.rewrite(e));
        match e {
            Expr::Var(_) | Expr::Bool(_) | Expr::Nil => e.clone(),
            Expr::Cons(a, b) => Expr::Cons(r(a), r(b)),
            Expr::Pair(a, b) => Expr::Pair(r(a), r(b)),
            Expr::App(a, b) => Expr::App(r(a), r(b)),
            Expr::If(b, x, y) => {
                let b = r(b);
                let x = r(x);
                Expr::If(b, x, r(y))
            }
            Expr::CaseList { scrut, nil, head, tail, cons } => {
                let scrut = r(scrut);
                let nil = r(nil);
                Expr::CaseList { scrut, nil, head: head.clone(), tail: tail.clone(), cons: r(cons) }
            }
            Expr::CasePair { scrut, left, right, body } => {
                let scrut = r(scrut);
                Expr::CasePair { scrut, left: left.clone(), right: right.clone(), body: r(body) }
            }
            Expr::Let(x, a, b) => {
                let a = r(a);
                Expr::Let(x.clone(), a, r(b))
            }
            Expr::Fun(f, x, b) => Expr::Fun(f.clone(), x.clone(), r(b)),
            Expr::Tick(q, b) => Expr::Tick(q.clone(), r(b)),
        }
    }
}

fn collect_aliases(e: &Expr, out: &mut HashMap<Name, Name>) {
    match e {
        Expr::Let(x, a, b) => {
            if let Expr::Var(y) = &**a {
                out.insert(x.clone(), y.clone());
            }
            collect_aliases(a, out);
            collect_aliases(b, out);
        }
        Expr::Var(_) | Expr::Bool(_) | Expr::Nil => {}
        Expr::Cons(a, b) | Expr::Pair(a, b) | Expr::App(a, b) => {
            collect_aliases(a, out);
            collect_aliases(b, out);
        }
        Expr::If(_, x, y) => {
            collect_aliases(x, out);
            collect_aliases(y, out);
        }
        Expr::CaseList { nil, cons, .. } => {
            collect_aliases(nil, out);
            collect_aliases(cons, out);
        }
        Expr::CasePair { body, .. } | Expr::Fun(_, _, body) | Expr::Tick(_, body) => collect_aliases(body, out),
    }
}

/// Specializes higher-order top-level functions at their call sites.
///
/// A higher-order function has the shape `fun h f = fun go x = e` where `f`
/// has a function type. Each application `h g`, with `g` naming a first-order
/// top-level function, becomes a reference to a new definition
/// `fun h_g x = e[f := g, go := h_g]`. The higher-order definitions are then
/// dropped. Programs without higher-order definitions are returned unchanged.
pub fn expand_higher_order(p: &Program) -> Result<Program, AnalysisError> {
    let norm = normalize_program(p);
    let typing = typecheck_program(&norm)?;
    let mut ho = HashMap::new();
    for (n, e) in norm.defs() {
        if let Expr::Fun(f, x, body) = e {
            if f == n && typing.of(x).is_some_and(|t| t.is_fun()) {
                match &**body {
                    Expr::Fun(go, arg, inner) => {
                        ho.insert(
                            n.clone(),
                            HoDef { param: x.clone(), inner_self: go.clone(), inner_arg: arg.clone(), inner_body: (**inner).clone() },
                        );
                    }
                    _ => return Err(AnalysisError::HigherOrder { fun: n.clone(), var: x.clone() }),
                }
            }
        }
    }
    if ho.is_empty() {
        return Ok(p.clone());
    }
    let mut aliases = HashMap::new();
    for e in norm.exprs() {
        collect_aliases(e, &mut aliases);
    }
    let first_order: HashSet<Name> = norm
        .defs()
        .filter(|(n, e)| matches!(e, Expr::Fun(..)) && !ho.contains_key(*n))
        .map(|(n, _)| n.clone())
        .collect();
    let mut used: HashSet<Name> = norm.defs().map(|(n, _)| n.clone()).collect();
    for e in norm.exprs() {
        used.extend(e.free_vars());
    }
    let mut ex = Expander {
        ho: &ho,
        aliases,
        first_order,
        used,
        specs: BTreeMap::new(),
        pending: Vec::new(),
        err: None,
        current: name(""),
    };
    let mut rest = Vec::new();
    for item in &norm.items {
        match item {
            Item::Def(n, _) if ho.contains_key(n) => {}
            Item::Def(n, e) => {
                ex.current = n.clone();
                rest.push(Item::Def(n.clone(), ex.rewrite(e)));
            }
            Item::Main(e) => {
                ex.current = name("main");
                rest.push(Item::Main(ex.rewrite(e)));
            }
        }
    }
    let mut specs = Vec::new();
    while let Some((h, g, s)) = ex.pending.pop() {
        let d = &ho[&h];
        let map = HashMap::from([(d.param.clone(), g.clone()), (d.inner_self.clone(), s.clone())]);
        let body = rename_vars(&d.inner_body, &map);
        ex.current = s.clone();
        let body = ex.rewrite(&body);
        specs.push(Item::Def(s.clone(), Expr::Fun(s, d.inner_arg.clone(), Box::new(body))));
    }
    if let Some(e) = ex.err {
        return Err(e);
    }
    specs.extend(rest);
    Ok(normalize_program(&Program { items: specs, hints: p.hints.clone() }))
}
