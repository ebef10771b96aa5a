//! Shared scenario set for the integration tests.
#![allow(dead_code)]

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sirbalance::generate::{generate_scenario, GeneratorOptions, ScenarioKind};
use sirbalance::{Scenario, Utility};

pub const UTILITIES: [Utility; 3] = [Utility::Log, Utility::NegPow(1), Utility::NegPow(2)];

#[derive(Debug, Clone)]
pub struct Case {
    pub seed: u64,
    pub kind: ScenarioKind,
    pub scenario: Scenario,
}

/// `count` seeded scenarios with `K ≤ 10` and `N ≤ 5`; individual budgets
/// only for `K ≤ 5`, so that `N = K` stays within range.
pub fn scenario_set(count: usize) -> Vec<Case> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    (0..count as u64)
        .map(|seed| {
            let kind = match rng.gen_range(0..3) {
                0 => ScenarioKind::Individual,
                1 => ScenarioKind::Sum,
                _ => ScenarioKind::Mixed,
            };
            let (k, n) = match kind {
                ScenarioKind::Individual => {
                    let k = rng.gen_range(2..=5);
                    (k, k)
                }
                ScenarioKind::Sum => (rng.gen_range(2..=10), 1),
                ScenarioKind::Mixed => (rng.gen_range(2..=10), rng.gen_range(2..=5)),
            };
            let scenario = generate_scenario(k, n, seed, kind, GeneratorOptions::default())
                .unwrap_or_else(|e| panic!("seed {seed}: {e}"));
            Case { seed, kind, scenario }
        })
        .collect()
}

/// `max_k |a_k - b_k| / max(‖b‖∞, tiny)`.
pub fn rel_dev(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    (a - b).amax() / b.amax().max(f64::MIN_POSITIVE)
}

pub fn uniform(rng: &mut ChaCha8Rng, k: usize, lo: f64, hi: f64) -> DVector<f64> {
    DVector::from_fn(k, |_, _| rng.gen_range(lo..hi))
}
