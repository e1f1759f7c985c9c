use std::collections::{BTreeSet, HashMap};

use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;

use crate::lang::{Expr, Item, Name, Program};

/// One function definition: every `fun` node of the program, named by its self name.
#[derive(Clone, Debug)]
pub struct Unit {
    pub name: Name,
    pub arg: Name,
    pub body: Expr,
    /// Free variables of the definition other than its own names.
    pub captured: BTreeSet<Name>,
    pub top_level: bool,
}

/// The functions of a program and how function variables resolve to them.
#[derive(Clone, Debug, Default)]
pub struct Units {
    pub units: Vec<Unit>,
    pub index: HashMap<Name, usize>,
    /// Variable → unit name, for every statically known function variable.
    pub resolve: HashMap<Name, Name>,
    /// Callee units of each unit.
    pub calls: Vec<BTreeSet<usize>>,
    /// Application sites whose function variable has no static definition: (unit, variable).
    pub unresolved: Vec<(Name, Name)>,
}

impl Units {
    pub fn get(&self, f: &str) -> Option<&Unit> {
        let target = self.resolve.get(f).map(|n| &**n).unwrap_or(f);
        self.index.get(target).map(|&i| &self.units[i])
    }

    pub fn resolve_var(&self, x: &Name) -> Option<&Name> {
        self.resolve.get(x)
    }

    /// Strongly connected components of the call graph, callees before callers.
    pub fn sccs(&self) -> Vec<Vec<usize>> {
        let mut g: DiGraph<usize, ()> = DiGraph::new();
        let nodes: Vec<_> = (0..self.units.len()).map(|i| g.add_node(i)).collect();
        for (i, cs) in self.calls.iter().enumerate() {
            for &j in cs {
                g.add_edge(nodes[i], nodes[j], ());
            }
        }
        tarjan_scc(&g)
            .into_iter()
            .map(|comp| {
                let mut v: Vec<usize> = comp.into_iter().map(|n| g[n]).collect();
                v.sort();
                v
            })
            .collect()
    }

    pub fn is_recursive_scc(&self, scc: &[usize]) -> bool {
        scc.len() > 1 || self.calls[scc[0]].contains(&scc[0])
    }
}

struct Collector {
    out: Units,
    pending: Vec<(usize, Name)>,
    aliases: Vec<(Name, Name)>,
}

impl Collector {
    fn walk(&mut self, e: &Expr, cur: Option<usize>, top_level_fun: bool) {
        match e {
            Expr::Bool(_) | Expr::Var(_) | Expr::Nil => {}
            Expr::Cons(a, b) | Expr::Pair(a, b) => {
                self.walk(a, cur, false);
                self.walk(b, cur, false);
            }
            Expr::App(f, x) => {
                if let (Some(u), Expr::Var(fv)) = (cur, &**f) {
                    self.pending.push((u, fv.clone()));
                }
                self.walk(f, cur, false);
                self.walk(x, cur, false);
            }
            Expr::If(b, e1, e2) => {
                self.walk(b, cur, false);
                self.walk(e1, cur, false);
                self.walk(e2, cur, false);
            }
            Expr::CaseList { scrut, nil, cons, .. } => {
                self.walk(scrut, cur, false);
                self.walk(nil, cur, false);
                self.walk(cons, cur, false);
            }
            Expr::CasePair { scrut, body, .. } => {
                self.walk(scrut, cur, false);
                self.walk(body, cur, false);
            }
            Expr::Let(x, e1, e2) => {
                match tail(e1) {
                    Expr::Fun(f, _, _) => self.aliases.push((x.clone(), f.clone())),
                    Expr::Var(y) => self.aliases.push((x.clone(), y.clone())),
                    _ => {}
                }
                self.walk(e1, cur, false);
                self.walk(e2, cur, false);
            }
            Expr::Fun(f, x, body) => {
                let mut captured = e.free_vars();
                captured.remove(f);
                let i = self.out.units.len();
                self.out.units.push(Unit {
                    name: f.clone(),
                    arg: x.clone(),
                    body: (**body).clone(),
                    captured,
                    top_level: top_level_fun,
                });
                self.out.index.insert(f.clone(), i);
                self.out.calls.push(BTreeSet::new());
                self.out.resolve.insert(f.clone(), f.clone());
                self.walk(body, Some(i), false);
            }
            Expr::Tick(_, e) => self.walk(e, cur, false),
        }
    }
}

/// The expression a chain of `let`s evaluates to.
fn tail(e: &Expr) -> &Expr {
    match e {
        Expr::Let(_, _, b) => tail(b),
        _ => e,
    }
}

/// Collects the function definitions of a let-normal program with distinct binders.
pub fn collect_units(p: &Program) -> Units {
    let mut c = Collector { out: Units::default(), pending: Vec::new(), aliases: Vec::new() };
    for item in &p.items {
        match item {
            Item::Def(n, e) => {
                match tail(e) {
                    Expr::Fun(f, _, _) if f != n => c.aliases.push((n.clone(), f.clone())),
                    Expr::Var(y) => c.aliases.push((n.clone(), y.clone())),
                    _ => {}
                }
                c.walk(e, None, matches!(e, Expr::Fun(..)));
            }
            Item::Main(e) => c.walk(e, None, false),
        }
    }
    // Aliases may chain in any order at top level; iterate to a fixpoint.
    loop {
        let mut changed = false;
        for (x, y) in &c.aliases {
            if c.out.resolve.contains_key(x) {
                continue;
            }
            if let Some(t) = c.out.resolve.get(y).cloned() {
                c.out.resolve.insert(x.clone(), t);
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    for (u, fv) in std::mem::take(&mut c.pending) {
        match c.out.resolve.get(&fv).and_then(|t| c.out.index.get(t)) {
            Some(&j) => {
                c.out.calls[u].insert(j);
            }
            None => c.out.unresolved.push((c.out.units[u].name.clone(), fv)),
        }
    }
    c.out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::{normalize_program, parse_program};

    #[test]
    fn callees_come_first() {
        let p = parse_program(
            "fun half l = case l of [] -> [] | a::t -> case t of [] -> [] | b::u -> a::half u\n\
             fun dbl l = case l of [] -> [] | a::t -> a::a::dbl t\n\
             fun round l = case l of [] -> [] | a::t -> a::dbl(round(half t))",
        )
        .unwrap();
        let u = collect_units(&normalize_program(&p));
        let order: Vec<Vec<String>> =
            u.sccs().iter().map(|s| s.iter().map(|&i| u.units[i].name.to_string()).collect()).collect();
        let pos = |n: &str| order.iter().position(|s| s.iter().any(|m| m == n)).unwrap();
        assert!(pos("half") < pos("round"));
        assert!(pos("dbl") < pos("round"));
        assert!(u.unresolved.is_empty());
    }

    #[test]
    fn higher_order_parameter_is_unresolved() {
        let p = parse_program("fun app f = fun go x = f x").unwrap();
        let u = collect_units(&normalize_program(&p));
        assert_eq!(u.unresolved.len(), 1);
        assert_eq!(&*u.unresolved[0].1, "f");
    }

    #[test]
    fn let_aliases_resolve() {
        let p = parse_program("fun id x = x\nfun g y = let h = id in h y").unwrap();
        let u = collect_units(&normalize_program(&p));
        assert!(u.unresolved.is_empty());
        assert_eq!(u.get("h").unwrap().name.as_ref(), "id");
    }
}
