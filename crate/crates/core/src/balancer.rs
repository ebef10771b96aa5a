//! Extended gain matrices and the eigenvector route to the max-min
//! SIR-balanced power vector.
//!
//! For every constraint `n` the matrix `B[n] = ΓV + Γz c_nᵀ / P_n` folds the
//! noise and the `n`-th budget into the gain matrix. The balanced power
//! vector is the Perron vector of the `B[n]` with the largest root, scaled
//! onto its budget; that root is the balance factor `β`.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::config::SolverConfig;
use crate::error::{Error, Result};
use crate::model::{constraint_levels, sir, ConstraintPolytope, NetworkModel};
use crate::neumann::{neumann, NeumannOutcome};
use crate::spectral::{is_irreducible, perron_root, perron_with, PerronTriple};

#[derive(Debug, Clone, PartialEq)]
pub struct ExtendedMatrices {
    /// `B[n]`, each `K×K`.
    pub b: Vec<DMatrix<f64>>,
    /// `A[n]`, each `(K+1)×(K+1)`.
    pub a: Vec<DMatrix<f64>>,
    /// Perron data of every `B[n]`.
    pub perron_b: Vec<PerronTriple>,
}

impl ExtendedMatrices {
    pub fn rho_b(&self) -> Vec<f64> {
        self.perron_b.iter().map(|t| t.rho).collect()
    }

    pub fn max_rho(&self) -> f64 {
        self.perron_b.iter().map(|t| t.rho).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Smallest index whose root is within relative `tie` of the largest.
    pub fn argmax(&self, tie: f64) -> usize {
        let max = self.max_rho();
        self.perron_b
            .iter()
            .position(|t| t.rho >= max * (1.0 - tie))
            .unwrap_or(0)
    }

    /// Perron root of `A[n]` computed on the extended matrix itself.
    pub fn rho_a(&self, n: usize, config: &SolverConfig) -> Result<f64> {
        perron_root(&self.a[n], config)
    }

    /// Positive eigenvector of `A[n]` with last entry one, truncated to `K`
    /// entries.
    pub fn a_route_power(&self, n: usize, config: &SolverConfig) -> Result<DVector<f64>> {
        let t = perron_with(&self.a[n], config)?;
        let k = t.right.len() - 1;
        let last = t.right[k];
        Ok(t.right.rows(0, k) / last)
    }
}

/// `B[n] = ΓV + (1/P_n) Γz c_nᵀ`.
pub fn extended_b(model: &NetworkModel, poly: &ConstraintPolytope, n: usize) -> DMatrix<f64> {
    let gz = model.scaled_noise() / poly.budgets()[n];
    model.scaled_gains() + gz * poly.incidence().row(n)
}

/// `A[n] = [[ΓV, Γz], [c_nᵀΓV / P_n, c_nᵀΓz / P_n]]`.
pub fn extended_a(model: &NetworkModel, poly: &ConstraintPolytope, n: usize) -> DMatrix<f64> {
    let k = model.num_links();
    let gv = model.scaled_gains();
    let gz = model.scaled_noise();
    let c = poly.incidence().row(n) / poly.budgets()[n];
    let mut a = DMatrix::zeros(k + 1, k + 1);
    a.view_mut((0, 0), (k, k)).copy_from(&gv);
    a.view_mut((0, k), (k, 1)).copy_from(&gz);
    a.view_mut((k, 0), (1, k)).copy_from(&(&c * &gv));
    a[(k, k)] = (&c * &gz)[0];
    a
}

/// Assembles every `B[n]` and `A[n]` and solves the `N` Perron problems.
///
/// All `B[n]` must be irreducible; the error lists every offending `n`.
pub fn build_extended(
    model: &NetworkModel,
    poly: &ConstraintPolytope,
    config: &SolverConfig,
) -> Result<ExtendedMatrices> {
    poly.check_links(model)?;
    let n_cons = poly.num_constraints();
    let b: Vec<DMatrix<f64>> = (0..n_cons).map(|n| extended_b(model, poly, n)).collect();
    let reducible: Vec<usize> = (0..n_cons).filter(|&n| !is_irreducible(&b[n])).collect();
    if !reducible.is_empty() {
        return Err(Error::NotIrreducible { indices: reducible });
    }
    let a = (0..n_cons).map(|n| extended_a(model, poly, n)).collect();
    let perron_b = b
        .par_iter()
        .map(|m| perron_with(m, config))
        .collect::<Result<Vec<_>>>()?;
    Ok(ExtendedMatrices { b, a, perron_b })
}

/// Residuals and counters recorded by [`solve_maxmin`].
#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostics {
    /// `max_k |γ_k / SIR_k(p̄) - β| / β`.
    pub balance_residual: f64,
    /// `‖B p̄ - β p̄‖∞ / ‖p̄‖∞` for the selected `B`.
    pub perron_residual: f64,
    /// `‖A (p̄,1) - β (p̄,1)‖∞ / (β max(‖p̄‖∞, 1))` for the selected `A`.
    pub a_route_residual: f64,
    /// `max_n g_n(p̄)`.
    pub max_level: f64,
    /// Power iterations over all Perron solves.
    pub iterations: usize,
}

/// The max-min SIR-balanced allocation. Constraint indices are 0-based.
#[derive(Debug, Clone, PartialEq)]
pub struct MaxMinSolution {
    pub power: DVector<f64>,
    /// Common ratio `γ_k / SIR_k(p̄)`.
    pub beta: f64,
    /// Achieved `min_k SIR_k / γ_k = 1 / β`.
    pub level: f64,
    /// Constraint whose Perron vector was used.
    pub n0: usize,
    /// Constraints tight at `p̄` (`g_n(p̄) ≥ 1 - tol_active`).
    pub active: Vec<usize>,
    /// Constraints whose root is within `tol_active` of the maximum.
    pub rho_argmax: Vec<usize>,
    pub sir: DVector<f64>,
    pub rho_b: Vec<f64>,
    pub diagnostics: Diagnostics,
}

pub fn solve_maxmin(model: &NetworkModel, poly: &ConstraintPolytope, config: &SolverConfig) -> Result<MaxMinSolution> {
    let ext = build_extended(model, poly, config)?;
    solve_with_extended(model, poly, &ext, config)
}

/// Picks `n0 = argmax ρ(B[n])`, scales its Perron vector onto `c_n0ᵀp = P_n0`
/// and cross-checks the result against the extended `A[n0]` eigen-equation.
pub fn solve_with_extended(
    model: &NetworkModel,
    poly: &ConstraintPolytope,
    ext: &ExtendedMatrices,
    config: &SolverConfig,
) -> Result<MaxMinSolution> {
    let k = model.num_links();
    let rho_b = ext.rho_b();
    let n0 = ext.argmax(10.0 * config.tol);
    let triple = &ext.perron_b[n0];
    let beta = triple.rho;

    let c0 = poly.row(n0);
    let power = &triple.right * (poly.budgets()[n0] / c0.dot(&triple.right));
    if let Some(v) = power.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
        return Err(Error::InternalInvariantViolation(format!(
            "Perron vector of an irreducible B has non-positive entry {v}"
        )));
    }

    let levels = constraint_levels(poly, &power)?;
    let active: Vec<usize> = (0..levels.len())
        .filter(|&n| levels[n] >= 1.0 - config.tol_active)
        .collect();
    let rho_argmax: Vec<usize> = (0..rho_b.len())
        .filter(|&n| rho_b[n] >= beta * (1.0 - config.tol_active))
        .collect();
    // A tight constraint shares p̄ as eigenvector, so its root sits within
    // β·(1 - g_n) of β.
    if let Some(&n) = active.iter().find(|n| !rho_argmax.contains(n)) {
        return Err(Error::InternalInvariantViolation(format!(
            "constraint {n} is tight but rho(B[{n}]) = {} is far below beta = {beta}",
            rho_b[n]
        )));
    }

    let sir = sir(model, &power)?;
    let balance_residual = (0..k)
        .map(|i| (model.targets()[i] / sir[i] - beta).abs() / beta)
        .fold(0.0, f64::max);
    let perron_residual = (&ext.b[n0] * &power - &power * beta).amax() / power.amax();

    let mut extended = DVector::from_element(k + 1, 1.0);
    extended.rows_mut(0, k).copy_from(&power);
    let a_route_residual = (&ext.a[n0] * &extended - &extended * beta).amax() / (beta * power.amax().max(1.0));
    if a_route_residual > 1e-6 {
        return Err(Error::InternalInvariantViolation(format!(
            "extended vector (p, 1) misses the A-matrix eigen-equation by {a_route_residual:.3e}"
        )));
    }

    Ok(MaxMinSolution {
        level: 1.0 / beta,
        beta,
        n0,
        active,
        rho_argmax,
        sir,
        rho_b,
        diagnostics: Diagnostics {
            balance_residual,
            perron_residual,
            a_route_residual,
            max_level: levels.max(),
            iterations: ext.perron_b.iter().map(|t| t.iterations).sum(),
        },
        power,
    })
}

/// `p(t) = (I/t - ΓV)⁻¹ Γz`, evaluated as `Σ_j (tΓV)ʲ tΓz`.
///
/// Requires `ρ(ΓV)·t < 1`. When `V` is irreducible the condition is checked
/// on the Perron root up front; otherwise a series that fails to settle
/// within the iteration budget is reported as a violation.
pub fn closed_form_power(model: &NetworkModel, t: f64, config: &SolverConfig) -> Result<DVector<f64>> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::Domain(format!("threshold t = {t} must be positive")));
    }
    let gv = model.scaled_gains();
    let irreducible = is_irreducible(&gv);
    if irreducible {
        let rho = perron_root(&gv, config)?;
        if rho * t >= 1.0 {
            return Err(Error::SpectralRadiusViolation(format!(
                "rho(GV) * t = {} >= 1",
                rho * t
            )));
        }
    }
    match neumann(&(gv * t), &(model.scaled_noise() * t), config.max_iter) {
        NeumannOutcome::Converged(p) | NeumannOutcome::Stopped(p) => Ok(p),
        NeumannOutcome::Exhausted(p) if irreducible => Err(Error::no_convergence(
            "Neumann series",
            config.max_iter,
            f64::NAN,
            p.iter().copied().collect(),
        )),
        NeumannOutcome::Exhausted(_) => Err(Error::SpectralRadiusViolation(format!(
            "Neumann series for t = {t} does not settle; rho(GV) * t is likely >= 1"
        ))),
    }
}

/// Feasibility of a target vector under the polytope.
#[derive(Debug, Clone, PartialEq)]
pub struct Feasibility {
    pub feasible: bool,
    pub max_rho: f64,
    /// Balanced power vector; meets every target when `feasible`.
    pub witness: Option<DVector<f64>>,
}

/// Targets are achievable iff `max_n ρ(B[n]) ≤ 1` with `Γ = diag(targets)`.
pub fn feasible(
    model: &NetworkModel,
    poly: &ConstraintPolytope,
    targets: &DVector<f64>,
    config: &SolverConfig,
) -> Result<Feasibility> {
    let model = model.with_targets(targets.clone())?;
    let ext = build_extended(&model, poly, config)?;
    let max_rho = ext.max_rho();
    if max_rho <= 1.0 {
        let sol = solve_with_extended(&model, poly, &ext, config)?;
        Ok(Feasibility {
            feasible: true,
            max_rho,
            witness: Some(sol.power),
        })
    } else {
        Ok(Feasibility {
            feasible: false,
            max_rho,
            witness: None,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{e1, e2, e3};
    use nalgebra::{dmatrix, dvector};

    fn cfg() -> SolverConfig {
        SolverConfig::default()
    }

    #[test]
    fn extended_matrices_e2() {
        let (m, p) = e2();
        let ext = build_extended(&m, &p, &cfg()).unwrap();
        assert!((&ext.b[0] - dmatrix![0.1, 0.2; 1.0, 0.0]).amax() < 1e-15);
        assert!((&ext.b[1] - dmatrix![0.0, 0.3; 0.8, 0.2]).amax() < 1e-15);
        let rho = ext.rho_b();
        assert!((rho[0] - 0.5).abs() < 1e-9);
        assert!((rho[1] - 0.6).abs() < 1e-9);
        let a1 = dmatrix![0.0, 0.2, 0.1; 0.8, 0.0, 0.2; 0.8, 0.0, 0.2];
        assert!((&ext.a[1] - a1).amax() < 1e-15);
        for n in 0..2 {
            assert!((ext.rho_a(n, &cfg()).unwrap() - rho[n]).abs() < 1e-8);
        }
    }

    #[test]
    fn extended_matrices_e1_and_e3() {
        let (m, p) = e1();
        let ext = build_extended(&m, &p, &cfg()).unwrap();
        assert!((&ext.b[0] - dmatrix![1.0, 0.5; 1.5, 0.0]).amax() < 1e-15);
        for r in ext.rho_b() {
            assert!((r - 1.5).abs() < 1e-9);
        }
        let (m, p) = e3();
        let ext = build_extended(&m, &p, &cfg()).unwrap();
        assert_eq!(ext.b.len(), 1);
        assert!((&ext.b[0] - dmatrix![0.05, 0.25; 0.9, 0.1]).amax() < 1e-15);
        assert!((ext.rho_b()[0] - 0.55).abs() < 1e-9);
    }

    #[test]
    fn reducible_extended_matrices_are_listed() {
        let m = NetworkModel::new(DMatrix::zeros(2, 2), dvector![1.0, 1.0], dvector![1.0, 1.0]).unwrap();
        let p = ConstraintPolytope::individual(dvector![1.0, 1.0]).unwrap();
        match build_extended(&m, &p, &cfg()) {
            Err(Error::NotIrreducible { indices }) => assert_eq!(indices, vec![0, 1]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn reducible_gains_under_sum_constraint_are_accepted() {
        let m = NetworkModel::new(DMatrix::zeros(2, 2), dvector![1.0, 1.0], dvector![1.0, 1.0]).unwrap();
        let p = ConstraintPolytope::sum(2, 2.0).unwrap();
        let sol = solve_maxmin(&m, &p, &cfg()).unwrap();
        assert!((&sol.power - dvector![1.0, 1.0]).amax() < 1e-9);
        assert!((sol.level - 1.0).abs() < 1e-9);
    }

    #[test]
    fn solve_e2() {
        let (m, p) = e2();
        let sol = solve_maxmin(&m, &p, &cfg()).unwrap();
        assert!((&sol.power - dvector![0.5, 1.0]).amax() < 1e-9);
        assert!((sol.beta - 0.6).abs() < 1e-9);
        assert!((sol.level - 5.0 / 3.0).abs() < 1e-8);
        assert_eq!(sol.n0, 1);
        assert_eq!(sol.active, vec![1]);
        assert!((&sol.sir - dvector![5.0 / 3.0, 10.0 / 3.0]).amax() < 1e-8);
        assert!(sol.diagnostics.balance_residual < 1e-9);
    }

    #[test]
    fn solve_e1_has_two_active_constraints() {
        let (m, p) = e1();
        let sol = solve_maxmin(&m, &p, &cfg()).unwrap();
        assert!((&sol.power - dvector![1.0, 1.0]).amax() < 1e-9);
        assert!((sol.beta - 1.5).abs() < 1e-9);
        assert_eq!(sol.n0, 0);
        assert_eq!(sol.active, vec![0, 1]);
        assert_eq!(sol.rho_argmax, vec![0, 1]);
    }

    #[test]
    fn solve_e3() {
        let (m, p) = e3();
        let sol = solve_maxmin(&m, &p, &cfg()).unwrap();
        assert!((&sol.power - dvector![2.0 / 3.0, 4.0 / 3.0]).amax() < 1e-9);
        assert!((sol.beta - 0.55).abs() < 1e-9);
        assert_eq!(sol.active, vec![0]);
    }

    #[test]
    fn a_route_matches_b_route() {
        let (m, p) = e2();
        let ext = build_extended(&m, &p, &cfg()).unwrap();
        let sol = solve_with_extended(&m, &p, &ext, &cfg()).unwrap();
        let via_a = ext.a_route_power(1, &cfg()).unwrap();
        assert!((via_a - &sol.power).amax() < 1e-8);
    }

    #[test]
    fn closed_form_examples() {
        let m = NetworkModel::new(DMatrix::zeros(2, 2), dvector![1.0, 2.0], dvector![1.0, 1.0]).unwrap();
        assert!((closed_form_power(&m, 0.5, &cfg()).unwrap() - dvector![0.5, 1.0]).amax() < 1e-15);

        let (m, _) = e2();
        let p = closed_form_power(&m, 1.0 / 0.6, &cfg()).unwrap();
        assert!((p - dvector![0.5, 1.0]).amax() < 1e-12);

        let (m, _) = e1();
        let p = closed_form_power(&m, 2.0 / 3.0, &cfg()).unwrap();
        assert!((p - dvector![1.0, 1.0]).amax() < 1e-12);
    }

    #[test]
    fn closed_form_rejects_large_threshold() {
        // ρ(ΓV) = sqrt(0.2·0.8) = 0.4
        let (m, _) = e2();
        assert!(matches!(
            closed_form_power(&m, 2.5, &cfg()),
            Err(Error::SpectralRadiusViolation(_))
        ));
        assert!(closed_form_power(&m, 2.4, &cfg()).is_ok());
        assert!(matches!(closed_form_power(&m, 0.0, &cfg()), Err(Error::Domain(_))));
    }

    #[test]
    fn feasibility_examples() {
        let (m, p) = e2();
        let f = feasible(&m, &p, &dvector![1.0, 2.0], &cfg()).unwrap();
        assert!(f.feasible);
        assert!((f.max_rho - 0.6).abs() < 1e-9);
        let w = f.witness.unwrap();
        assert!((&w - dvector![0.5, 1.0]).amax() < 1e-9);
        let s = sir(&m, &w).unwrap();
        assert!(s[0] >= 1.0 && s[1] >= 2.0);

        let f = feasible(&m, &p, &dvector![2.0, 4.0], &cfg()).unwrap();
        assert!(!f.feasible);
        assert!((f.max_rho - 1.2).abs() < 1e-9);

        let (m, p) = e1();
        let f = feasible(&m, &p, &dvector![1.0, 1.0], &cfg()).unwrap();
        assert!(!f.feasible);
        assert!((f.max_rho - 1.5).abs() < 1e-9);
    }
}
