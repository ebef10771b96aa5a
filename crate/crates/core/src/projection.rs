//! Projections onto the power polytope and onto the floored simplex.

use nalgebra::DVector;

use crate::model::{max_level, ConstraintPolytope};

/// Projects `target` onto `{p : Cp ≤ p̂, p ≥ floor}` in the norm
/// `‖d‖² = Σ_k (d_k / scale_k)²` using Dykstra's alternating projections
/// over the `N` halfspaces and the floor box.
///
/// With `scale = 1` this is the Euclidean projection. The solvers pass the
/// current iterate as `scale`, which turns a multiplicative step in log
/// coordinates into a step whose fixed points satisfy the KKT conditions of
/// the log-domain problem.
pub fn project_polytope(
    poly: &ConstraintPolytope,
    target: &DVector<f64>,
    scale: &DVector<f64>,
    floor: f64,
    max_sweeps: usize,
) -> DVector<f64> {
    let k = target.len();
    let n_cons = poly.num_constraints();
    // Work in u = p / scale, where the metric is Euclidean.
    let normals: Vec<DVector<f64>> = (0..n_cons).map(|n| poly.row(n).component_mul(scale)).collect();
    let norms_sq: Vec<f64> = normals.iter().map(|a| a.norm_squared()).collect();
    let lower = DVector::from_fn(k, |i, _| floor / scale[i]);

    let mut u = target.component_div(scale);
    let mut increments = vec![DVector::zeros(k); n_cons + 1];
    let mut before = u.clone();

    for _ in 0..max_sweeps {
        before.copy_from(&u);
        for (n, a) in normals.iter().enumerate() {
            let shifted = &u + &increments[n];
            let excess = a.dot(&shifted) - poly.budgets()[n];
            let projected = if excess > 0.0 {
                &shifted - a * (excess / norms_sq[n])
            } else {
                shifted.clone()
            };
            increments[n] = shifted - &projected;
            u = projected;
        }
        let shifted = &u + &increments[n_cons];
        let projected = shifted.zip_map(&lower, f64::max);
        increments[n_cons] = shifted - &projected;
        u = projected;

        let moved = (&u - &before).amax();
        if moved <= 1e-15 * u.amax().max(1e-300) {
            break;
        }
    }

    let mut p = u.component_mul(scale);
    // Dykstra approaches the constraints from outside; pull the last
    // rounding-level excess back in.
    if let Ok(level) = max_level(poly, &p) {
        if level > 1.0 {
            p /= level;
        }
    }
    p.apply(|v| *v = v.max(floor));
    p
}

/// Euclidean projection onto `{w : Σ w = 1, w ≥ floor}` by the sort-based
/// simplex projection applied to `w - floor`.
pub fn project_simplex(v: &DVector<f64>, floor: f64) -> DVector<f64> {
    let k = v.len();
    let radius = 1.0 - floor * k as f64;
    assert!(radius > 0.0, "floor {floor} too large for {k} weights");

    let shifted: Vec<f64> = v.iter().map(|x| x - floor).collect();
    let mut sorted = shifted.clone();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    let mut cumulative = 0.0;
    let mut theta = 0.0;
    for (i, &s) in sorted.iter().enumerate() {
        cumulative += s;
        let t = (cumulative - radius) / (i as f64 + 1.0);
        if s - t > 0.0 {
            theta = t;
        }
    }
    DVector::from_iterator(k, shifted.iter().map(|x| (x - theta).max(0.0) + floor))
}
