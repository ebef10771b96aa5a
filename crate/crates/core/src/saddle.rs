//! Saddle-point route: `G(w, p) = Σ_k w_k ψ(γ_k / SIR_k(p))` is minimized
//! over powers and maximized over simplex weights at the same time. Its
//! saddle value is `ψ(max_n ρ(B[n]))`, attained at the balanced power
//! vector and at any weight in the convex hull of the Perron weights
//! `y⁽ⁿ⁾ ∘ x⁽ⁿ⁾` of the tight constraints.

use std::io::Write;

use nalgebra::{DMatrix, DVector};

use crate::balancer::{build_extended, extended_b, solve_with_extended};
use crate::config::SolverConfig;
use crate::error::{Error, Result, Unconverged};
use crate::model::{check_power, sir_ratios, ConstraintPolytope, NetworkModel, Utility};
use crate::projection::project_simplex;
use crate::spectral::perron_with;
use crate::utility_opt::{gradient_f_log, interior_start, log_projected_step, WeightVector};

/// One row of the saddle iteration trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub iterate: usize,
    pub g_value: f64,
    /// `‖p - p̄‖∞ / ‖p̄‖∞` against the reference, or the primal step
    /// stationarity when no reference is given.
    pub primal_residual: f64,
    /// `‖w⁺ - w‖∞ / α` for the dual step.
    pub dual_residual: f64,
}

/// Writes the trace as CSV with a header row.
pub fn write_trace_csv<W: Write>(mut out: W, trace: &[TraceRow]) -> std::io::Result<()> {
    writeln!(out, "iterate,G_value,primal_residual,dual_residual")?;
    for row in trace {
        writeln!(
            out,
            "{},{:.16e},{:.16e},{:.16e}",
            row.iterate, row.g_value, row.primal_residual, row.dual_residual
        )?;
    }
    Ok(())
}

pub fn eval_g(model: &NetworkModel, utility: Utility, w: &WeightVector, p: &DVector<f64>) -> Result<f64> {
    if w.len() != model.num_links() {
        return Err(Error::Dimension(format!("weight vector has {} entries, K = {}", w.len(), model.num_links())));
    }
    let ratios = sir_ratios(model, p)?;
    Ok(w.as_vector().iter().zip(ratios.iter()).map(|(wk, r)| wk * utility.psi(1.0 / r)).sum())
}

/// `∂G/∂s` at `p = e^s`; the negative of the utility gradient.
pub fn gradient_g_log(model: &NetworkModel, utility: Utility, w: &WeightVector, p: &DVector<f64>) -> Result<DVector<f64>> {
    Ok(-gradient_f_log(model, utility, w, p)?)
}

/// `∂G/∂w_k = ψ(γ_k / SIR_k(p))`.
pub fn gradient_g_weights(model: &NetworkModel, utility: Utility, p: &DVector<f64>) -> Result<DVector<f64>> {
    Ok(sir_ratios(model, p)?.map(|r| utility.psi(1.0 / r)))
}

/// Lower bound `ψ(ρ(B)) ≤ Σ_k w_k ψ((B p)_k / p_k)` for `B = B[n]` and
/// `w = y ∘ x` from its Perron pair, valid for every positive `p`, with
/// equality exactly on multiples of `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct PerronBound {
    b: DMatrix<f64>,
    weights: DVector<f64>,
    rho: f64,
    perron: DVector<f64>,
}

impl PerronBound {
    pub fn new(model: &NetworkModel, poly: &ConstraintPolytope, n: usize, config: &SolverConfig) -> Result<Self> {
        poly.check_links(model)?;
        if n >= poly.num_constraints() {
            return Err(Error::Dimension(format!("constraint index {n} out of range")));
        }
        let b = extended_b(model, poly, n);
        let triple = perron_with(&b, config).map_err(|e| match e {
            Error::NotIrreducible { .. } => Error::NotIrreducible { indices: vec![n] },
            other => other,
        })?;
        Ok(Self {
            weights: triple.weight(),
            rho: triple.rho,
            perron: triple.right,
            b,
        })
    }

    pub fn perron_vector(&self) -> &DVector<f64> {
        &self.perron
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// `Σ_k w_k ψ((B p)_k / p_k) - ψ(ρ(B))`.
    pub fn gap(&self, utility: Utility, p: &DVector<f64>) -> Result<f64> {
        if p.len() != self.b.nrows() {
            return Err(Error::Dimension(format!("power has {} entries, K = {}", p.len(), self.b.nrows())));
        }
        if let Some((k, v)) = p.iter().enumerate().find(|(_, v)| !(**v > 0.0 && v.is_finite())) {
            return Err(Error::Domain(format!("p[{k}] = {v} must be positive")));
        }
        let bp = &self.b * p;
        let bound: f64 = (0..p.len()).map(|k| self.weights[k] * utility.psi(bp[k] / p[k])).sum();
        Ok(bound - utility.psi(self.rho))
    }
}

/// One-shot [`PerronBound::gap`].
pub fn perron_gap(
    model: &NetworkModel,
    poly: &ConstraintPolytope,
    utility: Utility,
    n: usize,
    p: &DVector<f64>,
    config: &SolverConfig,
) -> Result<f64> {
    check_power(model, p)?;
    PerronBound::new(model, poly, n, config)?.gap(utility, p)
}

/// Generators `w⁽ⁿ⁾ = y⁽ⁿ⁾ ∘ x⁽ⁿ⁾` (with `y⁽ⁿ⁾ᵀx⁽ⁿ⁾ = 1`) of the optimal
/// weight set, one per tight constraint.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimalWeightSet {
    pub constraints: Vec<usize>,
    pub generators: Vec<WeightVector>,
}

impl OptimalWeightSet {
    /// Euclidean distance from `w` to the convex hull of the generators.
    pub fn distance(&self, w: &DVector<f64>) -> f64 {
        let m = self.generators.len();
        if m == 1 {
            return (self.generators[0].as_vector() - w).norm();
        }
        // Projected gradient on the hull coefficients.
        let gens: Vec<&DVector<f64>> = self.generators.iter().map(|g| g.as_vector()).collect();
        let lipschitz: f64 = gens.iter().map(|g| g.norm_squared()).sum::<f64>().max(1e-12);
        let mut coef = DVector::from_element(m, 1.0 / m as f64);
        let combine = |c: &DVector<f64>| gens.iter().zip(c.iter()).fold(DVector::zeros(w.len()), |acc, (g, ci)| acc + *g * *ci);
        for _ in 0..20_000 {
            let resid = combine(&coef) - w;
            let grad = DVector::from_iterator(m, gens.iter().map(|g| g.dot(&resid)));
            let next = project_simplex(&(&coef - grad / lipschitz), 0.0);
            let moved = (&next - &coef).amax();
            coef = next;
            if moved < 1e-14 {
                break;
            }
        }
        (combine(&coef) - w).norm()
    }
}

pub fn optimal_weight_set(model: &NetworkModel, poly: &ConstraintPolytope, config: &SolverConfig) -> Result<OptimalWeightSet> {
    let ext = build_extended(model, poly, config)?;
    let sol = solve_with_extended(model, poly, &ext, config)?;
    let generators = sol
        .active
        .iter()
        .map(|&n| WeightVector::normalized(ext.perron_b[n].weight()))
        .collect::<Result<Vec<_>>>()?;
    Ok(OptimalWeightSet {
        constraints: sol.active,
        generators,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    /// Within `primal_tol` of the reference power vector.
    ReferenceReached,
    /// Both projected gradients below `grad_tol`.
    Stationary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SaddleOutcome {
    pub weights: WeightVector,
    pub power: DVector<f64>,
    pub iterations: usize,
    pub reason: StopReason,
    pub trace: Vec<TraceRow>,
}

/// Where the iteration starts; defaults to uniform weights and a strictly
/// interior power vector.
#[derive(Debug, Clone, Default)]
pub struct SaddleStart {
    pub weights: Option<WeightVector>,
    pub power: Option<DVector<f64>>,
}

/// `Σ_k w_k x_k ψ'(x_k)` at `x_k = γ_k / SIR_k(p)`. Both gradients of `G`
/// scale with it (it is identically one for `Log`), so dividing the step
/// by it makes the iteration insensitive to the level of the ratios.
fn elasticity(model: &NetworkModel, utility: Utility, w: &WeightVector, p: &DVector<f64>) -> Result<f64> {
    let ratios = sir_ratios(model, p)?;
    Ok(w.as_vector().iter().zip(ratios.iter()).map(|(wk, r)| wk * utility.psi_prime(1.0 / r) / r).sum())
}

/// Shortest run of consecutive in-tolerance iterates accepted as settled.
pub const SETTLE_MIN: usize = 100;

/// Simultaneous projected gradient descent in `s = ln p` and ascent in `w`
/// with diminishing steps `α_t = α₀ / (√(t+1) σ_t)`, where `σ_t` is the
/// elasticity of `ψ` at the current iterate. With
/// `config.saddle_extrapolate` each step re-evaluates both gradients at the
/// look-ahead point (extragradient), which damps the rotation around the
/// saddle point that plain gradient steps barely contract.
///
/// With a `reference` power vector the iteration stops once
/// `‖p - p̄‖∞ / ‖p̄‖∞ < primal_tol` has held for the trailing half of the
/// run (at least [`SETTLE_MIN`] iterations). The iterates circle the saddle
/// point, so a single pass through the tolerance ball says little about
/// the weights. Independently it stops when both step residuals fall below
/// `grad_tol`.
pub fn saddle_solve(
    model: &NetworkModel,
    poly: &ConstraintPolytope,
    utility: Utility,
    config: &SolverConfig,
    reference: Option<&DVector<f64>>,
    start: SaddleStart,
) -> Result<SaddleOutcome> {
    poly.check_links(model)?;
    let k = model.num_links();
    let p_floor = config.p_floor_rel * poly.budgets().min();
    let mut p = start.power.unwrap_or_else(|| interior_start(poly));
    check_power(model, &p)?;
    let mut w = match start.weights {
        Some(w) => w.into_inner(),
        None => DVector::from_element(k, 1.0 / k as f64),
    };
    let mut trace = Vec::new();
    let mut inside_since: Option<usize> = None;

    for t in 0..config.saddle_max_iter {
        let weights = WeightVector::normalized(w.clone())?;
        let alpha = config.alpha0 / ((t + 1) as f64).sqrt() / elasticity(model, utility, &weights, &p)?;
        let value = eval_g(model, utility, &weights, &p)?;
        let ascent_p = gradient_f_log(model, utility, &weights, &p)?;
        let ascent_w = gradient_g_weights(model, utility, &p)?;

        let mut p_next = log_projected_step(poly, &p, &ascent_p, alpha, p_floor, config);
        let mut w_next = project_simplex(&(&w + &ascent_w * alpha), config.w_floor);
        if config.saddle_extrapolate {
            let look = WeightVector::normalized(w_next.clone())?;
            let ascent_p = gradient_f_log(model, utility, &look, &p_next)?;
            let ascent_w = gradient_g_weights(model, utility, &p_next)?;
            p_next = log_projected_step(poly, &p, &ascent_p, alpha, p_floor, config);
            w_next = project_simplex(&(&w + &ascent_w * alpha), config.w_floor);
        }

        let primal_step = (&p_next - &p).component_div(&p).amax() / alpha;
        let dual_step = (&w_next - &w).amax() / alpha;
        let primal_residual = match reference {
            Some(r) => (&p - r).amax() / r.amax(),
            None => primal_step,
        };
        trace.push(TraceRow {
            iterate: t,
            g_value: value,
            primal_residual,
            dual_residual: dual_step,
        });

        inside_since = match (reference.is_some() && primal_residual < config.primal_tol, inside_since) {
            (true, None) => Some(t),
            (true, since) => since,
            (false, _) => None,
        };
        let settled = inside_since.is_some_and(|s| {
            let held = t + 1 - s;
            held >= SETTLE_MIN && 2 * held > t
        });

        let reason = if settled {
            Some(StopReason::ReferenceReached)
        } else if primal_step < config.grad_tol && dual_step < config.grad_tol {
            Some(StopReason::Stationary)
        } else {
            None
        };
        if let Some(reason) = reason {
            return Ok(SaddleOutcome {
                weights,
                power: p,
                iterations: t,
                reason,
                trace,
            });
        }
        p = p_next;
        w = w_next;
    }

    let residual = trace.last().map_or(f64::NAN, |r| r.primal_residual);
    Err(Error::NoConvergence {
        context: "saddle iteration",
        state: Box::new(Unconverged {
            iterations: config.saddle_max_iter,
            residual,
            iterate: p.iter().chain(w.iter()).copied().collect(),
            trace,
        }),
    })
}
