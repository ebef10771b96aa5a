//! Library routes checked against each other on generated scenarios.

mod common;

use common::{rel_dev, scenario_set, uniform, UTILITIES};
use nalgebra::DVector;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sirbalance::generate::{generate_scenario, GeneratorOptions, ScenarioKind};
use sirbalance::model::{constraint_levels, min_ratio};
use sirbalance::oracle::bisect_maxmin;
use sirbalance::utility_opt::{lambdas, maximize_f, maxmin_weights, qos_of_power, weights_for_boundary};
use sirbalance::{solve_maxmin, Scenario, SolverConfig};

fn cfg() -> SolverConfig {
    SolverConfig::default()
}

#[test]
fn scenario_files_round_trip_through_the_solver() {
    for case in scenario_set(20) {
        let again = Scenario::from_json(&case.scenario.to_json()).unwrap();
        assert_eq!(again, case.scenario);
        let a = solve_maxmin(&case.scenario.model, &case.scenario.poly, &cfg()).unwrap();
        let b = solve_maxmin(&again.model, &again.poly, &cfg()).unwrap();
        assert_eq!(a.power, b.power);
    }
}

#[test]
fn balanced_point_lies_on_the_qos_boundary() {
    for case in scenario_set(30) {
        let (m, p) = (&case.scenario.model, &case.scenario.poly);
        let sol = solve_maxmin(m, p, &cfg()).unwrap();
        for u in UTILITIES {
            let q = qos_of_power(m, u, &sol.power).unwrap();
            let lam = lambdas(m, p, &q, &cfg()).unwrap();
            let max = lam.iter().copied().fold(0.0, f64::max);
            assert!((max - 1.0).abs() < 1e-8, "seed {}: {max}", case.seed);
        }
    }
}

#[test]
fn boundary_weights_recover_interior_optimum() {
    // any positive boundary point is the utility optimum of its own weights
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for case in scenario_set(12) {
        let (m, p) = (&case.scenario.model, &case.scenario.poly);
        let raw = uniform(&mut rng, m.num_links(), 0.2, 1.0);
        let levels = constraint_levels(p, &raw).unwrap();
        let target = &raw / levels.max();
        for u in UTILITIES {
            let q = qos_of_power(m, u, &target).unwrap();
            let w = weights_for_boundary(m, p, &q, &cfg()).unwrap();
            let best = maximize_f(m, p, u, &w, &cfg()).unwrap();
            assert!(rel_dev(&best.power, &target) < 1e-4, "seed {} {u}", case.seed);
        }
    }
}

#[test]
fn generator_kinds_produce_their_constraint_shapes() {
    let opts = GeneratorOptions::default();
    let sum = generate_scenario(7, 1, 1, ScenarioKind::Sum, opts).unwrap();
    assert_eq!(sum.poly.incidence().row(0).sum(), 7.0);
    let mixed = generate_scenario(7, 4, 1, ScenarioKind::Mixed, opts).unwrap();
    assert_eq!(mixed.poly.num_constraints(), 4);
    assert!((1..4).all(|n| mixed.poly.row(n).sum() >= 1.0));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn eigen_and_bisection_agree(seed in 0u64..10_000, k in 2usize..8, n in 1usize..5) {
        let kind = if n == 1 { ScenarioKind::Sum } else { ScenarioKind::Mixed };
        let s = generate_scenario(k, n, seed, kind, GeneratorOptions::default()).unwrap();
        let sol = solve_maxmin(&s.model, &s.poly, &cfg()).unwrap();
        let bis = bisect_maxmin(&s.model, &s.poly, &cfg()).unwrap();
        prop_assert!((bis.t_star - sol.level).abs() <= 1e-6 * sol.level);
        prop_assert!(rel_dev(&bis.power, &sol.power) <= 1e-6);
    }

    #[test]
    fn balanced_level_dominates_feasible_power(seed in 0u64..10_000, scale in prop::collection::vec(0.01f64..1.0, 4)) {
        let s = generate_scenario(4, 4, seed, ScenarioKind::Individual, GeneratorOptions::default()).unwrap();
        let sol = solve_maxmin(&s.model, &s.poly, &cfg()).unwrap();
        let p = DVector::from_vec(scale).component_mul(s.poly.budgets());
        prop_assert!(min_ratio(&s.model, &p).unwrap() <= sol.level * (1.0 + 1e-9));
    }

    #[test]
    fn maxmin_weights_lead_back_to_the_balanced_point(seed in 0u64..1_000) {
        let s = generate_scenario(3, 1, seed, ScenarioKind::Sum, GeneratorOptions::default()).unwrap();
        let sol = solve_maxmin(&s.model, &s.poly, &cfg()).unwrap();
        let w = maxmin_weights(&s.model, &s.poly, &cfg()).unwrap();
        let best = maximize_f(&s.model, &s.poly, s.utility, &w, &cfg()).unwrap();
        prop_assert!(rel_dev(&best.power, &sol.power) < 1e-4);
    }
}
