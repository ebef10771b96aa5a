//! Network data model: gain matrix, noise, SIR targets, the power
//! constraint polytope and the utility catalogue.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Interference environment of `K` logical links.
///
/// `gains[(k, l)]` is the normalized power gain from transmitter `l` into
/// receiver `k`; the diagonal is zero. `noise` is normalized by the direct
/// gain and `targets` are the SIR targets.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkModel {
    gains: DMatrix<f64>,
    noise: DVector<f64>,
    targets: DVector<f64>,
}

impl NetworkModel {
    pub fn new(gains: DMatrix<f64>, noise: DVector<f64>, targets: DVector<f64>) -> Result<Self> {
        let k = gains.nrows();
        if gains.ncols() != k {
            return Err(Error::Dimension(format!(
                "gain matrix is {}x{}, expected square",
                gains.nrows(),
                gains.ncols()
            )));
        }
        if k < 2 {
            return Err(Error::InvalidModel(format!("need at least 2 links, got {k}")));
        }
        if noise.len() != k || targets.len() != k {
            return Err(Error::Dimension(format!(
                "K = {k} but noise has {} and targets have {} entries",
                noise.len(),
                targets.len()
            )));
        }
        for i in 0..k {
            for j in 0..k {
                let v = gains[(i, j)];
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::InvalidModel(format!("V[{i}][{j}] = {v} is not a nonnegative number")));
                }
                if i == j && v != 0.0 {
                    return Err(Error::InvalidModel(format!("V[{i}][{i}] = {v}, diagonal must be zero")));
                }
            }
        }
        check_positive("z", &noise).map_err(Error::InvalidModel)?;
        check_positive("gamma", &targets).map_err(Error::InvalidModel)?;
        Ok(Self { gains, noise, targets })
    }

    pub fn num_links(&self) -> usize {
        self.gains.nrows()
    }

    pub fn gains(&self) -> &DMatrix<f64> {
        &self.gains
    }

    pub fn noise(&self) -> &DVector<f64> {
        &self.noise
    }

    pub fn targets(&self) -> &DVector<f64> {
        &self.targets
    }

    /// Same network with a different target vector.
    pub fn with_targets(&self, targets: DVector<f64>) -> Result<Self> {
        Self::new(self.gains.clone(), self.noise.clone(), targets)
    }

    /// `ΓV`: gains with row `k` scaled by `γ_k`.
    pub fn scaled_gains(&self) -> DMatrix<f64> {
        let mut m = self.gains.clone();
        for (k, mut row) in m.row_iter_mut().enumerate() {
            row *= self.targets[k];
        }
        m
    }

    /// `Γz`.
    pub fn scaled_noise(&self) -> DVector<f64> {
        self.noise.component_mul(&self.targets)
    }

    /// Interference-plus-noise `Vp + z`.
    pub fn interference(&self, p: &DVector<f64>) -> DVector<f64> {
        &self.gains * p + &self.noise
    }
}

/// Raw attenuations `G[k][l]` (transmitter `l` to receiver `k`) and noise
/// variances, before normalization by the direct gains.
#[derive(Debug, Clone, PartialEq)]
pub struct RawChannel {
    attenuation: DMatrix<f64>,
    noise_var: DVector<f64>,
}

impl RawChannel {
    pub fn new(attenuation: DMatrix<f64>, noise_var: DVector<f64>) -> Result<Self> {
        let k = attenuation.nrows();
        if attenuation.ncols() != k || noise_var.len() != k {
            return Err(Error::Dimension(format!(
                "attenuation is {}x{}, noise variance has {} entries",
                attenuation.nrows(),
                attenuation.ncols(),
                noise_var.len()
            )));
        }
        for i in 0..k {
            for j in 0..k {
                let v = attenuation[(i, j)];
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::InvalidChannel(format!("G[{i}][{j}] = {v} is not a nonnegative number")));
                }
            }
            if attenuation[(i, i)] <= 0.0 {
                return Err(Error::InvalidChannel(format!(
                    "direct gain G[{i}][{i}] = {} must be positive",
                    attenuation[(i, i)]
                )));
            }
        }
        check_positive("sigma2", &noise_var).map_err(Error::InvalidChannel)?;
        Ok(Self { attenuation, noise_var })
    }
}

/// `v_{k,l} = G_{k,l} / G_{k,k}` off the diagonal, `z_k = σ_k² / G_{k,k}`.
pub fn normalize_channel(raw: &RawChannel, targets: DVector<f64>) -> Result<NetworkModel> {
    let k = raw.attenuation.nrows();
    if targets.len() != k {
        return Err(Error::Dimension(format!("K = {k} but gamma has {} entries", targets.len())));
    }
    let gains = DMatrix::from_fn(k, k, |i, j| {
        if i == j {
            0.0
        } else {
            raw.attenuation[(i, j)] / raw.attenuation[(i, i)]
        }
    });
    let noise = DVector::from_fn(k, |i, _| raw.noise_var[i] / raw.attenuation[(i, i)]);
    NetworkModel::new(gains, noise, targets)
}

/// Per-link SIR `p_k / ((Vp)_k + z_k)`.
pub fn sir(model: &NetworkModel, p: &DVector<f64>) -> Result<DVector<f64>> {
    check_power(model, p)?;
    let interference = model.interference(p);
    Ok(p.component_div(&interference))
}

/// `SIR_k(p) / γ_k`.
pub fn sir_ratios(model: &NetworkModel, p: &DVector<f64>) -> Result<DVector<f64>> {
    Ok(sir(model, p)?.component_div(model.targets()))
}

/// Smallest `SIR_k(p) / γ_k`; the max-min objective.
pub fn min_ratio(model: &NetworkModel, p: &DVector<f64>) -> Result<f64> {
    Ok(sir_ratios(model, p)?.min())
}

pub(crate) fn check_power(model: &NetworkModel, p: &DVector<f64>) -> Result<()> {
    if p.len() != model.num_links() {
        return Err(Error::Dimension(format!(
            "power vector has {} entries, K = {}",
            p.len(),
            model.num_links()
        )));
    }
    if let Some((k, v)) = p.iter().enumerate().find(|(_, v)| !(**v > 0.0 && v.is_finite())) {
        return Err(Error::Domain(format!("p[{k}] = {v} must be positive")));
    }
    Ok(())
}

/// Power polytope `P = {p ≥ 0 : Cp ≤ p̂}` with a 0/1 matrix `C`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintPolytope {
    incidence: DMatrix<f64>,
    budgets: DVector<f64>,
}

impl ConstraintPolytope {
    pub fn new(incidence: DMatrix<f64>, budgets: DVector<f64>) -> Result<Self> {
        let n = incidence.nrows();
        if n == 0 {
            return Err(Error::InvalidModel("at least one power constraint is required".into()));
        }
        if budgets.len() != n {
            return Err(Error::Dimension(format!(
                "C has {n} rows but p_hat has {} entries",
                budgets.len()
            )));
        }
        if let Some(v) = incidence.iter().find(|v| **v != 0.0 && **v != 1.0) {
            return Err(Error::InvalidModel(format!("C entries must be 0 or 1, found {v}")));
        }
        for (k, col) in incidence.column_iter().enumerate() {
            if col.iter().all(|v| *v == 0.0) {
                return Err(Error::InvalidModel(format!(
                    "link {k} is not covered by any constraint, P would be unbounded"
                )));
            }
        }
        check_positive("p_hat", &budgets).map_err(Error::InvalidModel)?;
        Ok(Self { incidence, budgets })
    }

    /// One constraint per link, `p_k ≤ P_k`.
    pub fn individual(budgets: DVector<f64>) -> Result<Self> {
        let k = budgets.len();
        Self::new(DMatrix::identity(k, k), budgets)
    }

    /// Single sum-power constraint `Σ p_k ≤ total`.
    pub fn sum(num_links: usize, total: f64) -> Result<Self> {
        Self::new(DMatrix::from_element(1, num_links, 1.0), DVector::from_element(1, total))
    }

    pub fn num_constraints(&self) -> usize {
        self.incidence.nrows()
    }

    pub fn num_links(&self) -> usize {
        self.incidence.ncols()
    }

    pub fn incidence(&self) -> &DMatrix<f64> {
        &self.incidence
    }

    pub fn budgets(&self) -> &DVector<f64> {
        &self.budgets
    }

    /// Row `n` of `C` as a column vector.
    pub fn row(&self, n: usize) -> DVector<f64> {
        self.incidence.row(n).transpose()
    }

    /// Largest power each link can use on its own, `min_{n : c_nk = 1} P_n`.
    pub fn box_bounds(&self) -> DVector<f64> {
        DVector::from_fn(self.num_links(), |k, _| {
            (0..self.num_constraints())
                .filter(|&n| self.incidence[(n, k)] > 0.0)
                .map(|n| self.budgets[n])
                .fold(f64::INFINITY, f64::min)
        })
    }

    pub(crate) fn check_links(&self, model: &NetworkModel) -> Result<()> {
        if self.num_links() != model.num_links() {
            return Err(Error::Dimension(format!(
                "constraints cover {} links, model has {}",
                self.num_links(),
                model.num_links()
            )));
        }
        Ok(())
    }
}

/// `g_n(p) = c_nᵀp / P_n` for every constraint.
pub fn constraint_levels(poly: &ConstraintPolytope, p: &DVector<f64>) -> Result<DVector<f64>> {
    if p.len() != poly.num_links() {
        return Err(Error::Dimension(format!(
            "power vector has {} entries, constraints cover {} links",
            p.len(),
            poly.num_links()
        )));
    }
    Ok((poly.incidence() * p).component_div(poly.budgets()))
}

/// `max_n g_n(p)`; `p ∈ P` iff this is at most one.
pub fn max_level(poly: &ConstraintPolytope, p: &DVector<f64>) -> Result<f64> {
    Ok(constraint_levels(poly, p)?.max())
}

/// Utility `φ` applied to the normalized SIR `SIR_k/γ_k`.
///
/// `Log` is `φ(x) = ln x`, `NegPow(n)` is `φ(x) = -x^{-n}`. Both satisfy
/// the monotonicity and log-convex-inverse assumptions, so the QoS region is
/// convex. The QoS codomain of `NegPow` is the negative half line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[derive(Default)]
pub enum Utility {
    #[default]
    Log,
    NegPow(u32),
}


impl Utility {
    pub fn new_negpow(n: u32) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidModel("negpow exponent must be at least 1".into()));
        }
        Ok(Utility::NegPow(n))
    }

    pub fn phi(self, x: f64) -> f64 {
        match self {
            Utility::Log => x.ln(),
            Utility::NegPow(n) => -x.powi(-(n as i32)),
        }
    }

    pub fn phi_prime(self, x: f64) -> f64 {
        match self {
            Utility::Log => 1.0 / x,
            Utility::NegPow(n) => n as f64 * x.powi(-(n as i32) - 1),
        }
    }

    /// Whether `q` lies in the codomain of `φ`.
    pub fn in_qos_domain(self, q: f64) -> bool {
        match self {
            Utility::Log => q.is_finite(),
            Utility::NegPow(_) => q < 0.0 && q.is_finite(),
        }
    }

    /// Inverse utility `g = φ⁻¹`.
    pub fn g(self, q: f64) -> f64 {
        match self {
            Utility::Log => q.exp(),
            Utility::NegPow(n) => (-q).powf(-1.0 / n as f64),
        }
    }

    pub fn g_prime(self, q: f64) -> f64 {
        match self {
            Utility::Log => q.exp(),
            Utility::NegPow(n) => {
                let n = n as f64;
                (-q).powf(-1.0 / n - 1.0) / n
            }
        }
    }

    /// `ψ(x) = -φ(1/x)`.
    pub fn psi(self, x: f64) -> f64 {
        match self {
            Utility::Log => x.ln(),
            Utility::NegPow(n) => x.powi(n as i32),
        }
    }

    pub fn psi_prime(self, x: f64) -> f64 {
        match self {
            Utility::Log => 1.0 / x,
            Utility::NegPow(n) => n as f64 * x.powi(n as i32 - 1),
        }
    }
}

impl std::fmt::Display for Utility {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Utility::Log => write!(f, "log"),
            Utility::NegPow(n) => write!(f, "negpow:{n}"),
        }
    }
}

impl std::str::FromStr for Utility {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "log" => Ok(Utility::Log),
            _ => {
                let n = s
                    .strip_prefix("negpow:")
                    .and_then(|n| n.parse::<u32>().ok())
                    .ok_or_else(|| Error::Parse(format!("unknown utility '{s}', expected log or negpow:<n>")))?;
                Utility::new_negpow(n)
            }
        }
    }
}

fn check_positive(name: &str, v: &DVector<f64>) -> std::result::Result<(), String> {
    match v.iter().enumerate().find(|(_, x)| !(**x > 0.0 && x.is_finite())) {
        Some((i, x)) => Err(format!("{name}[{i}] = {x} must be positive")),
        None => Ok(()),
    }
}
