use thiserror::Error;

use crate::saddle::TraceRow;

/// State carried out of an iteration that hit its budget.
#[derive(Debug, Clone, PartialEq)]
pub struct Unconverged {
    pub iterations: usize,
    /// Last value of the stopping criterion.
    pub residual: f64,
    /// Best (or last) iterate at the time of giving up.
    pub iterate: Vec<f64>,
    /// Per-iteration trace, filled by the saddle-point solver only.
    pub trace: Vec<TraceRow>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid channel: {0}")]
    InvalidChannel(String),
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("argument outside the function domain: {0}")]
    Domain(String),
    #[error("matrix is not irreducible ({})", describe_indices(.indices))]
    NotIrreducible { indices: Vec<usize> },
    #[error("{context} did not converge after {} iterations (residual {:.3e})", .state.iterations, .state.residual)]
    NoConvergence {
        context: &'static str,
        state: Box<Unconverged>,
    },
    #[error("spectral radius condition violated: {0}")]
    SpectralRadiusViolation(String),
    #[error("QoS point is not on the boundary of the feasible region (max lambda = {max_lambda})")]
    NotOnBoundary { max_lambda: f64 },
    #[error("no feasible balancing level found")]
    NoFeasibleT,
    #[error("operation supports K = {supported} only, got K = {got}")]
    UnsupportedDimension { supported: usize, got: usize },
    #[error("no irreducible scenario after {attempts} attempts")]
    RetryBudgetExhausted { attempts: usize },
    #[error("internal invariant violated: {0}")]
    InternalInvariantViolation(String),
    #[error("scenario parse error: {0}")]
    Parse(String),
}

fn describe_indices(indices: &[usize]) -> String {
    if indices.is_empty() {
        return "input matrix".to_string();
    }
    let list: Vec<String> = indices.iter().map(|n| n.to_string()).collect();
    format!("extended matrices B[n] for n in {{{}}}", list.join(", "))
}

impl Error {
    pub(crate) fn no_convergence(
        context: &'static str,
        iterations: usize,
        residual: f64,
        iterate: Vec<f64>,
    ) -> Self {
        Error::NoConvergence {
            context,
            state: Box::new(Unconverged {
                iterations,
                residual,
                iterate,
                trace: Vec::new(),
            }),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
