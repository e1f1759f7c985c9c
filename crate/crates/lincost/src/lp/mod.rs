//! Exact linear programming.

mod export;
mod expr;
mod problem;
mod simplex;

pub use export::export_lp;
pub use expr::{LinExpr, VarId};
pub use problem::{check_assignment, Constraint, LPProblem, Rel, Solution, Status, VarDecl, Violation};
pub use simplex::{solve, solve_with, SolveOptions};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Rational;

    fn q(n: i64) -> Rational {
        Rational::from_integer(n.into())
    }

    #[test]
    fn bounded_max() {
        let mut p = LPProblem::new();
        let x = p.add_var("x", true);
        p.le(LinExpr::var(x), LinExpr::int(3));
        p.maximize(LinExpr::var(x));
        let s = solve(&p);
        assert_eq!(s.status, Status::Optimal);
        assert_eq!(s.value(x), q(3));
    }

    #[test]
    fn infeasible() {
        let mut p = LPProblem::new();
        let x = p.add_var("x", true);
        p.ge(LinExpr::var(x), LinExpr::int(1));
        p.le(LinExpr::var(x), LinExpr::int(0));
        assert_eq!(solve(&p).status, Status::Infeasible);
    }

    #[test]
    fn unbounded() {
        let mut p = LPProblem::new();
        let x = p.add_var("x", false);
        p.ge(LinExpr::var(x), LinExpr::int(1));
        p.maximize(LinExpr::var(x));
        assert_eq!(solve(&p).status, Status::Unbounded);
    }

    #[test]
    fn free_variables_go_negative() {
        let mut p = LPProblem::new();
        let x = p.add_var("x", false);
        p.le(LinExpr::var(x), LinExpr::int(-2));
        p.maximize(LinExpr::var(x));
        let s = solve(&p);
        assert_eq!(s.value(x), q(-2));
        assert!(check_assignment(&p, &s.assignment).is_ok());
    }

    #[test]
    fn equality_and_fractions() {
        let mut p = LPProblem::new();
        let x = p.add_var("x", true);
        let y = p.add_var("y", true);
        p.equal(LinExpr::var(x).scale(&q(3)) + LinExpr::var(y), LinExpr::int(1));
        p.maximize(LinExpr::var(x));
        let s = solve(&p);
        assert_eq!(s.value(x), Rational::new(1.into(), 3.into()));
        assert_eq!(s.value(y), q(0));
    }

    #[test]
    fn one_var_lp_file() {
        let mut p = LPProblem::new();
        let x = p.add_var("x", true);
        p.le(LinExpr::var(x), LinExpr::int(3));
        p.maximize(LinExpr::var(x));
        let text = export_lp(&p);
        assert_eq!(text, "Maximize\n obj: x\nSubject To\n c0: x <= 3\nBounds\nEnd\n");
        assert_eq!(text.lines().count(), 6);
        assert_eq!(export_lp(&p), text);
    }

    #[test]
    fn thirds_are_scaled() {
        let mut p = LPProblem::new();
        let x = p.add_var("x", true);
        let y = p.add_var("y", false);
        p.le(LinExpr::term(x, Rational::new(1.into(), 3.into())) + LinExpr::var(y), LinExpr::int(2));
        let text = export_lp(&p);
        assert!(text.contains(" c0: x + 3 y <= 6\n"), "{text}");
        assert!(text.contains("Maximize\n obj: 0\n"));
        assert!(text.contains(" y free\n"));
    }

    #[test]
    fn solution_json() {
        let mut p = LPProblem::new();
        let x = p.add_var("x", true);
        p.le(LinExpr::var(x).scale(&q(2)), LinExpr::int(3));
        p.maximize(LinExpr::var(x));
        let j = solve(&p).to_json(&p);
        assert_eq!(j, serde_json::json!({"status": "optimal", "vars": {"x": "3/2"}, "objective": "3/2"}));
    }
}
