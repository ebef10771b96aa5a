//! Utility-based route: QoS/power maps, the boundary test on the QoS
//! region, weight synthesis from Perron vectors, and weighted utility
//! maximization in log-power coordinates.

use nalgebra::{DMatrix, DVector};

use crate::balancer::{build_extended, extended_b, solve_with_extended};
use crate::config::SolverConfig;
use crate::error::{Error, Result};
use crate::model::{check_power, max_level, sir_ratios, ConstraintPolytope, NetworkModel, Utility};
use crate::neumann::{neumann, NeumannOutcome};
use crate::projection::project_polytope;
use crate::spectral::{is_irreducible, perron_with, PerronTriple};

/// QoS vector `q_k = φ(SIR_k / γ_k)` tagged with its utility.
#[derive(Debug, Clone, PartialEq)]
pub struct QosPoint {
    pub q: DVector<f64>,
    pub utility: Utility,
}

impl QosPoint {
    pub fn new(q: DVector<f64>, utility: Utility) -> Result<Self> {
        if let Some((k, v)) = q.iter().enumerate().find(|(_, v)| !utility.in_qos_domain(**v)) {
            return Err(Error::Domain(format!("q[{k}] = {v} is outside the range of {utility}")));
        }
        Ok(Self { q, utility })
    }

    /// Diagonal of `G(q) = diag(g(q_k))`.
    pub fn inverse_utility(&self) -> DVector<f64> {
        self.q.map(|v| self.utility.g(v))
    }
}

/// Strictly positive weights summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector(DVector<f64>);

impl WeightVector {
    /// Rescales a positive vector onto the unit simplex.
    pub fn normalized(v: DVector<f64>) -> Result<Self> {
        if let Some((k, x)) = v.iter().enumerate().find(|(_, x)| !(**x > 0.0 && x.is_finite())) {
            return Err(Error::Domain(format!("weight {k} = {x} must be positive")));
        }
        let total = v.sum();
        Ok(Self(v / total))
    }

    pub fn as_vector(&self) -> &DVector<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DVector<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

pub fn qos_of_power(model: &NetworkModel, utility: Utility, p: &DVector<f64>) -> Result<QosPoint> {
    let ratios = sir_ratios(model, p)?;
    QosPoint::new(ratios.map(|r| utility.phi(r)), utility)
}

/// Inverse of [`qos_of_power`]: `p(q) = (I - G(q)ΓV)⁻¹ G(q)Γz`.
///
/// Requires `ρ(G(q)ΓV) < 1`; otherwise `q` lies outside every achievable
/// region.
pub fn power_of_qos(model: &NetworkModel, qos: &QosPoint, config: &SolverConfig) -> Result<DVector<f64>> {
    if qos.q.len() != model.num_links() {
        return Err(Error::Dimension(format!(
            "QoS vector has {} entries, K = {}",
            qos.q.len(),
            model.num_links()
        )));
    }
    let g = qos.inverse_utility();
    let mut m = model.scaled_gains();
    for (k, mut row) in m.row_iter_mut().enumerate() {
        row *= g[k];
    }
    let rhs = model.scaled_noise().component_mul(&g);
    let irreducible = is_irreducible(&m);
    if irreducible {
        let rho = perron_with(&m, config)?.rho;
        if rho >= 1.0 {
            return Err(Error::SpectralRadiusViolation(format!("rho(G(q) GV) = {rho} >= 1")));
        }
    }
    match neumann(&m, &rhs, config.max_iter) {
        NeumannOutcome::Converged(p) | NeumannOutcome::Stopped(p) => Ok(p),
        NeumannOutcome::Exhausted(p) if irreducible => Err(Error::no_convergence(
            "Neumann series",
            config.max_iter,
            f64::NAN,
            p.iter().copied().collect(),
        )),
        NeumannOutcome::Exhausted(_) => Err(Error::SpectralRadiusViolation(
            "Neumann series for G(q) GV does not settle".into(),
        )),
    }
}

fn scaled_extended(model: &NetworkModel, poly: &ConstraintPolytope, qos: &QosPoint, n: usize) -> DMatrix<f64> {
    let g = qos.inverse_utility();
    let mut b = extended_b(model, poly, n);
    for (k, mut row) in b.row_iter_mut().enumerate() {
        row *= g[k];
    }
    b
}

/// Perron data of `G(q) B[n]`; its root is `λ_n(q)`.
pub fn lambda_triple(
    model: &NetworkModel,
    poly: &ConstraintPolytope,
    qos: &QosPoint,
    n: usize,
    config: &SolverConfig,
) -> Result<PerronTriple> {
    poly.check_links(model)?;
    if n >= poly.num_constraints() {
        return Err(Error::Dimension(format!(
            "constraint index {n} out of range (N = {})",
            poly.num_constraints()
        )));
    }
    perron_with(&scaled_extended(model, poly, qos, n), config).map_err(|e| match e {
        Error::NotIrreducible { .. } => Error::NotIrreducible { indices: vec![n] },
        other => other,
    })
}

/// `λ_n(q) = ρ(G(q) B[n])`. `q` is on the boundary of the QoS region iff
/// `max_n λ_n(q) = 1`, and inside it iff the maximum is below one.
pub fn lambda_n(
    model: &NetworkModel,
    poly: &ConstraintPolytope,
    qos: &QosPoint,
    n: usize,
    config: &SolverConfig,
) -> Result<f64> {
    Ok(lambda_triple(model, poly, qos, n, config)?.rho)
}

/// `λ_n(q)` for every constraint.
pub fn lambdas(model: &NetworkModel, poly: &ConstraintPolytope, qos: &QosPoint, config: &SolverConfig) -> Result<Vec<f64>> {
    (0..poly.num_constraints())
        .map(|n| lambda_n(model, poly, qos, n, config))
        .collect()
}

/// Weights whose utility maximizer is the boundary point `q`:
/// `w ∝ u(q) ∘ y ∘ x`, with `u_k = g'(q_k)/g(q_k)` and `y`, `x` the Perron
/// vectors of `G(q)B[n]`.
///
/// When several constraints are tight at `q` every convex combination of
/// their weights works; the barycenter is returned, which keeps symmetric
/// instances symmetric.
pub fn weights_for_boundary(
    model: &NetworkModel,
    poly: &ConstraintPolytope,
    qos: &QosPoint,
    config: &SolverConfig,
) -> Result<WeightVector> {
    let triples = (0..poly.num_constraints())
        .map(|n| lambda_triple(model, poly, qos, n, config))
        .collect::<Result<Vec<_>>>()?;
    let max_lambda = triples.iter().map(|t| t.rho).fold(f64::NEG_INFINITY, f64::max);
    if (max_lambda - 1.0).abs() > 1e-6 {
        return Err(Error::NotOnBoundary { max_lambda });
    }
    let tight = triples.iter().filter(|t| t.rho >= max_lambda * (1.0 - config.tol_active));
    let u = qos.q.map(|v| qos.utility.g_prime(v) / qos.utility.g(v));
    WeightVector::normalized(barycenter(tight.map(|t| t.weight()), model.num_links())?.component_mul(&u))
}

/// Weights `∝ y ∘ x` of the extended matrices of the tight constraints
/// (their barycenter when there are several). Maximizing the weighted
/// utility with them recovers the max-min balanced power for any utility
/// in the catalogue.
pub fn maxmin_weights(model: &NetworkModel, poly: &ConstraintPolytope, config: &SolverConfig) -> Result<WeightVector> {
    let ext = build_extended(model, poly, config)?;
    let sol = solve_with_extended(model, poly, &ext, config)?;
    WeightVector::normalized(barycenter(sol.active.iter().map(|&n| ext.perron_b[n].weight()), model.num_links())?)
}

fn barycenter(weights: impl Iterator<Item = DVector<f64>>, k: usize) -> Result<DVector<f64>> {
    let mut sum = DVector::zeros(k);
    let mut count = 0;
    for w in weights {
        sum += WeightVector::normalized(w)?.into_inner();
        count += 1;
    }
    if count == 0 {
        return Err(Error::InternalInvariantViolation("no tight constraint".into()));
    }
    Ok(sum / count as f64)
}

/// Aggregate utility `F(p, w) = Σ_k w_k φ(SIR_k(p)/γ_k)`.
pub fn objective_f(model: &NetworkModel, utility: Utility, w: &WeightVector, p: &DVector<f64>) -> Result<f64> {
    check_weights(model, w)?;
    let ratios = sir_ratios(model, p)?;
    Ok(w.as_vector().iter().zip(ratios.iter()).map(|(wk, r)| wk * utility.phi(*r)).sum())
}

/// Gradient of `F(e^s, w)` with respect to the log powers `s = ln p`.
///
/// With `r_k = SIR_k/γ_k`, `a_k = w_k φ'(r_k) r_k` and `I = Vp + z`:
/// `∂F/∂s_j = a_j - p_j Σ_k a_k V_kj / I_k`.
pub fn gradient_f_log(model: &NetworkModel, utility: Utility, w: &WeightVector, p: &DVector<f64>) -> Result<DVector<f64>> {
    check_weights(model, w)?;
    check_power(model, p)?;
    let interference = model.interference(p);
    let ratios = p.component_div(&interference).component_div(model.targets());
    let a = DVector::from_fn(p.len(), |k, _| w.as_vector()[k] * utility.phi_prime(ratios[k]) * ratios[k]);
    let spill = model.gains().tr_mul(&a.component_div(&interference));
    Ok(&a - p.component_mul(&spill))
}

fn check_weights(model: &NetworkModel, w: &WeightVector) -> Result<()> {
    if w.len() != model.num_links() {
        return Err(Error::Dimension(format!(
            "weight vector has {} entries, K = {}",
            w.len(),
            model.num_links()
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct AscentResult {
    pub power: DVector<f64>,
    pub value: f64,
    pub iterations: usize,
    /// Final `‖(p⁺ - p)/p‖∞` for a unit trial step.
    pub stationarity: f64,
}

/// One projected step in log coordinates: `p ∘ (1 + step·direction)` pulled
/// back onto `P` in the metric scaled by `p`.
pub(crate) fn log_projected_step(
    poly: &ConstraintPolytope,
    p: &DVector<f64>,
    direction: &DVector<f64>,
    step: f64,
    floor: f64,
    config: &SolverConfig,
) -> DVector<f64> {
    let target = p.component_mul(&direction.map(|d| 1.0 + step * d));
    project_polytope(poly, &target, p, floor, config.dykstra_max_sweeps)
}

/// Strictly interior starting point at half the tightest budget.
pub(crate) fn interior_start(poly: &ConstraintPolytope) -> DVector<f64> {
    let ones = DVector::from_element(poly.num_links(), 1.0);
    let level = max_level(poly, &ones).unwrap_or(1.0);
    ones * (0.5 / level)
}

/// `argmax_{p ∈ P₊} F(p, w)` by projected gradient ascent in `s = ln p`
/// with Armijo backtracking (initial step 1, factor 1/2, constant 1e-4).
pub fn maximize_f(
    model: &NetworkModel,
    poly: &ConstraintPolytope,
    utility: Utility,
    w: &WeightVector,
    config: &SolverConfig,
) -> Result<AscentResult> {
    poly.check_links(model)?;
    check_weights(model, w)?;
    const ARMIJO: f64 = 1e-4;
    let floor = config.p_floor_rel * poly.budgets().min();

    let mut p = interior_start(poly);
    let mut value = objective_f(model, utility, w, &p)?;
    let mut stationarity = f64::INFINITY;

    for it in 0..config.ascent_max_iter {
        let grad = gradient_f_log(model, utility, w, &p)?;
        let mut step = 1.0;
        let mut accepted = None;
        for attempt in 0..60 {
            let cand = log_projected_step(poly, &p, &grad, step, floor, config);
            // ∇_p F = ∇_s F / p
            let predicted: f64 = grad.iter().zip(cand.iter().zip(p.iter())).map(|(g, (c, q))| g * (c - q) / q).sum();
            if attempt == 0 {
                stationarity = (&cand - &p).component_div(&p).amax();
                if stationarity < config.grad_tol {
                    return Ok(AscentResult {
                        power: p,
                        value,
                        iterations: it,
                        stationarity,
                    });
                }
            }
            let cand_value = objective_f(model, utility, w, &cand)?;
            let noise = 1e-15 * (1.0 + value.abs());
            if cand_value >= value + ARMIJO * predicted - noise {
                accepted = Some((cand, cand_value));
                break;
            }
            step *= 0.5;
        }
        match accepted {
            Some((cand, cand_value)) => {
                p = cand;
                value = cand_value;
            }
            // No step improves beyond rounding: p is as stationary as F can resolve.
            None => {
                return Ok(AscentResult {
                    power: p,
                    value,
                    iterations: it,
                    stationarity,
                })
            }
        }
    }
    Err(Error::no_convergence(
        "utility ascent",
        config.ascent_max_iter,
        stationarity,
        p.iter().copied().collect(),
    ))
}
