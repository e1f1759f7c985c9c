mod common;

use common::*;
use lincost::lp::{check_assignment, export_lp, solve, Status};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn optimal_assignments_pass_the_checker(seed in any::<u64>()) {
        let p = random_lp(&mut ChaCha8Rng::seed_from_u64(seed));
        let s = solve(&p);
        if s.is_optimal() {
            prop_assert!(check_assignment(&p, &s.assignment).is_ok(), "{}", export_lp(&p));
        }
    }

    #[test]
    fn resolving_is_identical(seed in any::<u64>()) {
        let p = random_lp(&mut ChaCha8Rng::seed_from_u64(seed));
        let (a, b) = (solve(&p), solve(&p.clone()));
        prop_assert_eq!(a.to_json(&p).to_string(), b.to_json(&p).to_string());
    }

    #[test]
    fn matches_vertex_enumeration(seed in any::<u64>()) {
        let c = Canonical::random(&mut ChaCha8Rng::seed_from_u64(seed));
        let s = solve(&c.primal());
        match s.status {
            Status::Optimal => prop_assert_eq!(Some(s.objective), c.vertex_optimum()),
            Status::Infeasible => prop_assert_eq!(c.vertex_optimum(), None),
            Status::Unbounded => prop_assert!(c.vertex_optimum().is_some()),
            Status::Timeout => prop_assert!(false, "no deadline was set"),
        }
    }

    #[test]
    fn strong_duality(seed in any::<u64>()) {
        let c = Canonical::random(&mut ChaCha8Rng::seed_from_u64(seed));
        let (p, d) = (solve(&c.primal()), solve(&c.dual()));
        match p.status {
            Status::Optimal => {
                prop_assert_eq!(d.status, Status::Optimal);
                prop_assert_eq!(p.objective, -d.objective);
            }
            Status::Unbounded => prop_assert_eq!(d.status, Status::Infeasible),
            Status::Infeasible => prop_assert_ne!(d.status, Status::Optimal),
            Status::Timeout => prop_assert!(false, "no deadline was set"),
        }
    }
}
