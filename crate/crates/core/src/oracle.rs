//! Reference solutions that avoid the eigenvector machinery entirely.

use nalgebra::{dvector, DVector};
use rayon::prelude::*;

use crate::config::SolverConfig;
use crate::error::{Error, Result};
use crate::model::{constraint_levels, max_level, min_ratio, ConstraintPolytope, NetworkModel};
use crate::neumann::{neumann_until, NeumannOutcome};

#[derive(Debug, Clone, PartialEq)]
pub struct BisectionResult {
    /// Largest admissible threshold, `1/β` up to the bracket width.
    pub t_star: f64,
    pub power: DVector<f64>,
    pub iterations: usize,
}

/// `p(t) = Σ_j (tΓV)ʲ tΓz` if the series settles inside the polytope.
///
/// Partial sums only grow, so the summation is abandoned as soon as one
/// budget is exceeded; a divergent series (`ρ(ΓV)·t ≥ 1`) always ends
/// that way.
pub fn admissible_power(
    model: &NetworkModel,
    poly: &ConstraintPolytope,
    t: f64,
    config: &SolverConfig,
) -> Option<DVector<f64>> {
    let gv = model.scaled_gains() * t;
    let rhs = model.scaled_noise() * t;
    let over_budget = |p: &DVector<f64>| max_level(poly, p).map_or(true, |l| l > 1.0);
    match neumann_until(&gv, &rhs, config.max_iter, over_budget) {
        NeumannOutcome::Converged(p) if !over_budget(&p) => Some(p),
        _ => None,
    }
}

/// Largest `t` with `max_n g_n(p(t)) ≤ 1`, found by bisection.
///
/// `p(t)` grows componentwise in `t`, so admissibility is monotone. The
/// bracket starts at `0.5 / r` with `r` the largest row sum over all
/// extended matrices (a bound on every Perron root) and widens upward by
/// doubling.
pub fn bisect_maxmin(model: &NetworkModel, poly: &ConstraintPolytope, config: &SolverConfig) -> Result<BisectionResult> {
    poly.check_links(model)?;
    let gv = model.scaled_gains();
    let gz = model.scaled_noise();
    let row_bound = (0..poly.num_constraints())
        .map(|n| {
            let c = poly.row(n);
            let extra = c.sum() / poly.budgets()[n];
            (0..model.num_links())
                .map(|k| gv.row(k).sum() + gz[k] * extra)
                .fold(0.0, f64::max)
        })
        .fold(0.0, f64::max);

    let mut iterations = 0;
    let mut lo = 0.5 / row_bound;
    let mut lo_power = loop {
        iterations += 1;
        if let Some(p) = admissible_power(model, poly, lo, config) {
            break p;
        }
        lo *= 0.5;
        if iterations > 200 || lo == 0.0 {
            return Err(Error::NoFeasibleT);
        }
    };
    let mut hi = 2.0 * lo;
    while let Some(p) = admissible_power(model, poly, hi, config) {
        iterations += 1;
        lo = hi;
        lo_power = p;
        hi *= 2.0;
        if iterations > 400 {
            return Err(Error::InternalInvariantViolation(
                "balancing threshold is unbounded".into(),
            ));
        }
    }
    while hi - lo >= config.tol_t {
        iterations += 1;
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        match admissible_power(model, poly, mid, config) {
            Some(p) => {
                lo = mid;
                lo_power = p;
            }
            None => hi = mid,
        }
    }
    Ok(BisectionResult {
        t_star: lo,
        power: lo_power,
        iterations,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridResult {
    pub level: f64,
    pub power: DVector<f64>,
}

/// Brute-force max-min over a `resolution × resolution` grid of the
/// bounding box of `P` (two links only). The grid excludes zero power.
pub fn grid_bruteforce(model: &NetworkModel, poly: &ConstraintPolytope, resolution: usize) -> Result<GridResult> {
    poly.check_links(model)?;
    if model.num_links() != 2 {
        return Err(Error::UnsupportedDimension {
            supported: 2,
            got: model.num_links(),
        });
    }
    if resolution < 1 {
        return Err(Error::Domain("grid resolution must be positive".into()));
    }
    let bounds = poly.box_bounds();
    let step = [bounds[0] / resolution as f64, bounds[1] / resolution as f64];

    let best = (1..=resolution)
        .into_par_iter()
        .map(|i| {
            let mut row_best: Option<(f64, DVector<f64>)> = None;
            for j in 1..=resolution {
                let p = dvector![i as f64 * step[0], j as f64 * step[1]];
                let inside = constraint_levels(poly, &p).is_ok_and(|l| l.iter().all(|&g| g <= 1.0 + 1e-12));
                if !inside {
                    continue;
                }
                let level = min_ratio(model, &p).unwrap_or(f64::NEG_INFINITY);
                if row_best.as_ref().is_none_or(|(b, _)| level > *b) {
                    row_best = Some((level, p));
                }
            }
            row_best
        })
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .fold(None::<(f64, DVector<f64>)>, |acc, cand| match acc {
            Some(a) if a.0 >= cand.0 => Some(a),
            _ => Some(cand),
        });

    let (level, power) = best.ok_or(Error::NoFeasibleT)?;
    Ok(GridResult { level, power })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{e1, e2, e3};
    use nalgebra::DMatrix;

    fn cfg() -> SolverConfig {
        SolverConfig::default()
    }

    #[test]
    fn bisection_examples() {
        let (m, p) = e2();
        let r = bisect_maxmin(&m, &p, &cfg()).unwrap();
        assert!((r.t_star - 5.0 / 3.0).abs() < 1e-9);
        assert!((r.power - dvector![0.5, 1.0]).amax() < 1e-8);

        let (m, p) = e1();
        let r = bisect_maxmin(&m, &p, &cfg()).unwrap();
        assert!((r.t_star - 2.0 / 3.0).abs() < 1e-9);
        assert!((r.power - dvector![1.0, 1.0]).amax() < 1e-8);

        let (m, p) = e3();
        let r = bisect_maxmin(&m, &p, &cfg()).unwrap();
        assert!((r.t_star - 1.0 / 0.55).abs() < 1e-9);
        assert!((r.power - dvector![2.0 / 3.0, 4.0 / 3.0]).amax() < 1e-8);
    }

    #[test]
    fn power_grows_with_threshold() {
        let (m, p) = e2();
        let loose = ConstraintPolytope::individual(dvector![1e6, 1e6]).unwrap();
        let mut prev: Option<DVector<f64>> = None;
        for t in [0.1, 0.5, 1.0, 1.5, 2.0, 2.4] {
            let cur = admissible_power(&m, &loose, t, &cfg()).unwrap();
            if let Some(prev) = prev {
                assert!(cur.iter().zip(prev.iter()).all(|(a, b)| a > b));
            }
            prev = Some(cur);
        }
        // past the budget, and past the spectral limit ρ(ΓV)·t < 1 (t = 2.5)
        assert!(admissible_power(&m, &p, 1.7, &cfg()).is_none());
        assert!(admissible_power(&m, &loose, 2.6, &cfg()).is_none());
    }

    #[test]
    fn grid_examples() {
        let (m, p) = e2();
        let g = grid_bruteforce(&m, &p, 2000).unwrap();
        assert!((g.level - 5.0 / 3.0).abs() < 2e-3);
        assert!(g.level <= 5.0 / 3.0 + 1e-12);

        let (m, p) = e1();
        let g = grid_bruteforce(&m, &p, 2000).unwrap();
        assert!((g.level - 2.0 / 3.0).abs() < 2e-3);
        assert!((g.power - dvector![1.0, 1.0]).amax() < 1e-2);

        let m = NetworkModel::new(DMatrix::zeros(2, 2), dvector![1.0, 1.0], dvector![1.0, 1.0]).unwrap();
        let p = ConstraintPolytope::individual(dvector![1.0, 1.0]).unwrap();
        let g = grid_bruteforce(&m, &p, 100).unwrap();
        assert!((g.level - 1.0).abs() < 1e-12);
        assert!((g.power - dvector![1.0, 1.0]).amax() < 1e-12);
    }

    #[test]
    fn grid_rejects_more_links() {
        let m = NetworkModel::new(DMatrix::from_element(3, 3, 0.1) - DMatrix::identity(3, 3) * 0.1, dvector![1.0, 1.0, 1.0], dvector![1.0, 1.0, 1.0]).unwrap();
        let p = ConstraintPolytope::sum(3, 1.0).unwrap();
        assert!(matches!(
            grid_bruteforce(&m, &p, 100),
            Err(Error::UnsupportedDimension { supported: 2, got: 3 })
        ));
    }
}
