//! Seeded random scenarios whose extended matrices are all irreducible.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::balancer::extended_b;
use crate::error::{Error, Result};
use crate::model::{ConstraintPolytope, NetworkModel, Utility};
use crate::scenario::Scenario;
use crate::spectral::is_irreducible;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScenarioKind {
    /// `C = I`, one budget per link; needs `N = K`.
    Individual,
    /// A single total budget; needs `N = 1`.
    Sum,
    /// A total budget plus `N - 1` random group budgets; needs `N ≥ 2`.
    Mixed,
}

impl std::str::FromStr for ScenarioKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "individual" => Ok(Self::Individual),
            "sum" => Ok(Self::Sum),
            "mixed" => Ok(Self::Mixed),
            _ => Err(Error::Parse(format!("unknown scenario kind '{s}', expected individual, sum or mixed"))),
        }
    }
}

impl std::fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Individual => "individual",
            Self::Sum => "sum",
            Self::Mixed => "mixed",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneratorOptions {
    /// Probability that an off-diagonal gain is nonzero.
    pub density: f64,
    pub max_attempts: usize,
}

impl Default for GeneratorOptions {
    fn default() -> Self {
        Self {
            density: 1.0,
            max_attempts: 100,
        }
    }
}

/// Draws `V` off the diagonal from `U(0.01, 0.5/K)`, `z` from `U(0.01, 0.2)`,
/// sets `γ = 1` and builds constraints for `kind`. Draws are repeated until
/// every `B[n]` is irreducible. Same arguments, same scenario.
pub fn generate_scenario(
    k: usize,
    n: usize,
    seed: u64,
    kind: ScenarioKind,
    options: GeneratorOptions,
) -> Result<Scenario> {
    if k < 2 {
        return Err(Error::InvalidModel(format!("need at least 2 links, got {k}")));
    }
    let expected = match kind {
        ScenarioKind::Individual => n == k,
        ScenarioKind::Sum => n == 1,
        ScenarioKind::Mixed => n >= 2,
    };
    if !expected {
        return Err(Error::InvalidModel(format!("{kind} constraints cannot have N = {n} with K = {k}")));
    }
    if !(0.0..=1.0).contains(&options.density) {
        return Err(Error::Domain(format!("density {} outside [0, 1]", options.density)));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..options.max_attempts {
        let gains = DMatrix::from_fn(k, k, |i, j| {
            if i == j || (options.density < 1.0 && !rng.gen_bool(options.density)) {
                0.0
            } else {
                rng.gen_range(0.01..0.5 / k as f64)
            }
        });
        let noise = DVector::from_fn(k, |_, _| rng.gen_range(0.01..0.2));
        let model = NetworkModel::new(gains, noise, DVector::from_element(k, 1.0))?;
        let poly = constraints(&mut rng, k, n, kind)?;
        if (0..n).all(|i| is_irreducible(&extended_b(&model, &poly, i))) {
            return Scenario::new(model, poly, Utility::Log);
        }
    }
    Err(Error::RetryBudgetExhausted {
        attempts: options.max_attempts,
    })
}

fn constraints(rng: &mut ChaCha8Rng, k: usize, n: usize, kind: ScenarioKind) -> Result<ConstraintPolytope> {
    let incidence = match kind {
        ScenarioKind::Individual => DMatrix::identity(k, k),
        ScenarioKind::Sum => DMatrix::from_element(1, k, 1.0),
        ScenarioKind::Mixed => {
            let mut c = DMatrix::zeros(n, k);
            c.row_mut(0).fill(1.0);
            for i in 1..n {
                let forced = rng.gen_range(0..k);
                for j in 0..k {
                    if j == forced || rng.gen_bool(0.5) {
                        c[(i, j)] = 1.0;
                    }
                }
            }
            c
        }
    };
    let budgets = DVector::from_fn(n, |i, _| incidence.row(i).sum() * rng.gen_range(0.5..2.0));
    ConstraintPolytope::new(incidence, budgets)
}
