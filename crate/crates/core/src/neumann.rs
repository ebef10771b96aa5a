//! Truncated Neumann series `Σ_j Mʲ b` for nonnegative `M` and `b`.

use nalgebra::{DMatrix, DVector};

/// Relative size of the last term at which the series is truncated.
pub const TRUNCATION: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq)]
pub enum NeumannOutcome {
    /// Last term fell below `TRUNCATION` times the partial sum.
    Converged(DVector<f64>),
    /// The caller's predicate fired on a partial sum.
    Stopped(DVector<f64>),
    /// Iteration budget used up, or the partial sums stopped being finite.
    Exhausted(DVector<f64>),
}

/// Sums `b + Mb + M²b + …`. With nonnegative terms the partial sums grow
/// monotonically, so `stop` may end the summation as soon as a monotone
/// predicate is met (for example a violated power budget).
pub fn neumann_until<F>(m: &DMatrix<f64>, b: &DVector<f64>, max_iter: usize, mut stop: F) -> NeumannOutcome
where
    F: FnMut(&DVector<f64>) -> bool,
{
    let mut sum = b.clone();
    let mut term = b.clone();
    let mut next = DVector::zeros(b.len());
    for _ in 0..max_iter {
        if stop(&sum) {
            return NeumannOutcome::Stopped(sum);
        }
        m.mul_to(&term, &mut next);
        std::mem::swap(&mut term, &mut next);
        sum += &term;
        if !sum.iter().all(|v| v.is_finite()) {
            return NeumannOutcome::Exhausted(sum);
        }
        if term.amax() <= TRUNCATION * sum.amax() {
            return NeumannOutcome::Converged(sum);
        }
    }
    NeumannOutcome::Exhausted(sum)
}

pub fn neumann(m: &DMatrix<f64>, b: &DVector<f64>, max_iter: usize) -> NeumannOutcome {
    neumann_until(m, b, max_iter, |_| false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{dmatrix, dvector};

    #[test]
    fn matches_direct_inverse() {
        let m = dmatrix![0.1, 0.3; 0.2, 0.4];
        let b = dvector![1.0, 2.0];
        let expected = (DMatrix::identity(2, 2) - &m).try_inverse().unwrap() * &b;
        match neumann(&m, &b, 10_000) {
            NeumannOutcome::Converged(s) => assert!((s - expected).amax() < 1e-12),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn divergent_series_exhausts() {
        let m = dmatrix![0.0, 1.0; 1.0, 0.0];
        assert!(matches!(neumann(&m, &dvector![1.0, 1.0], 500), NeumannOutcome::Exhausted(_)));
    }

    #[test]
    fn predicate_stops_early() {
        let m = dmatrix![0.0, 1.0; 1.0, 0.0];
        match neumann_until(&m, &dvector![1.0, 1.0], 500, |s| s.amax() > 10.0) {
            NeumannOutcome::Stopped(s) => assert!(s.amax() > 10.0 && s.amax() < 12.0),
            other => panic!("{other:?}"),
        }
    }
}
