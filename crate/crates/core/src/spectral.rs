//! Irreducibility analysis and Perron eigenpairs of nonnegative matrices.

use nalgebra::{DMatrix, DVector};

use crate::config::SolverConfig;
use crate::error::{Error, Result};

/// Dominant eigenpair of a nonnegative irreducible matrix.
///
/// `right` is scaled to unit 1-norm and `left` so that `leftᵀ right = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct PerronTriple {
    pub rho: f64,
    pub right: DVector<f64>,
    pub left: DVector<f64>,
    /// `‖M x - ρ x‖∞` for the normalized right vector.
    pub residual: f64,
    /// Power iterations spent on both sides.
    pub iterations: usize,
}

impl PerronTriple {
    /// `left ∘ right`; sums to one by construction.
    pub fn weight(&self) -> DVector<f64> {
        self.left.component_mul(&self.right)
    }
}

/// Strongly connected components of the digraph with an edge `i → j`
/// whenever `m[(i, j)] > 0`. Returns the component id of each node;
/// ids are assigned in reverse topological order (Tarjan).
pub fn strongly_connected_components(m: &DMatrix<f64>) -> Vec<usize> {
    let n = m.nrows();
    let adj: Vec<Vec<usize>> = (0..n)
        .map(|i| (0..n).filter(|&j| m[(i, j)] > 0.0).collect())
        .collect();

    const UNSEEN: usize = usize::MAX;
    let mut index = vec![UNSEEN; n];
    let mut low = vec![0; n];
    let mut on_stack = vec![false; n];
    let mut comp = vec![UNSEEN; n];
    let mut stack = Vec::with_capacity(n);
    let mut next_index = 0;
    let mut next_comp = 0;
    // (node, position in its adjacency list)
    let mut call: Vec<(usize, usize)> = Vec::new();

    for root in 0..n {
        if index[root] != UNSEEN {
            continue;
        }
        call.push((root, 0));
        index[root] = next_index;
        low[root] = next_index;
        next_index += 1;
        stack.push(root);
        on_stack[root] = true;

        while let Some(&mut (v, ref mut pos)) = call.last_mut() {
            if let Some(&w) = adj[v].get(*pos) {
                *pos += 1;
                if index[w] == UNSEEN {
                    index[w] = next_index;
                    low[w] = next_index;
                    next_index += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    call.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
                continue;
            }
            call.pop();
            if let Some(&(parent, _)) = call.last() {
                low[parent] = low[parent].min(low[v]);
            }
            if low[v] == index[v] {
                while let Some(w) = stack.pop() {
                    on_stack[w] = false;
                    comp[w] = next_comp;
                    if w == v {
                        break;
                    }
                }
                next_comp += 1;
            }
        }
    }
    comp
}

/// True iff the positive-entry digraph of `m` is strongly connected.
///
/// A 1×1 matrix counts as irreducible only when its entry is positive.
pub fn is_irreducible(m: &DMatrix<f64>) -> bool {
    let n = m.nrows();
    if n == 0 || m.ncols() != n {
        return false;
    }
    if n == 1 {
        return m[(0, 0)] > 0.0;
    }
    strongly_connected_components(m).iter().all(|&c| c == 0)
}

pub fn row_sum_bounds(m: &DMatrix<f64>) -> (f64, f64) {
    m.row_iter()
        .map(|r| r.sum())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| (lo.min(s), hi.max(s)))
}

/// Perron root with right and left eigenvectors by shifted power iteration.
///
/// Each side iterates on `M + cI` with `c` a tenth of the largest row sum,
/// which makes periodic matrices primitive without moving the eigenvectors.
/// Iteration stops once the Collatz-Wielandt enclosure
/// `max_k (Mx)_k/x_k - min_k (Mx)_k/x_k` is at most `tol·ρ`.
pub fn perron(m: &DMatrix<f64>, tol: f64, max_iter: usize) -> Result<PerronTriple> {
    let n = m.nrows();
    if m.ncols() != n {
        return Err(Error::Dimension(format!("matrix is {}x{}, expected square", n, m.ncols())));
    }
    if let Some(v) = m.iter().find(|v| !(**v >= 0.0 && v.is_finite())) {
        return Err(Error::Domain(format!("matrix entry {v} is not a nonnegative number")));
    }
    if !is_irreducible(m) {
        return Err(Error::NotIrreducible { indices: Vec::new() });
    }
    if !(tol > 0.0) {
        return Err(Error::Domain(format!("tolerance {tol} must be positive")));
    }

    let (min_row, max_row) = row_sum_bounds(m);
    let shift = 0.1 * max_row;

    let right = power_side(m, shift, tol, max_iter, false)?;
    let left = power_side(m, shift, tol, max_iter, true)?;

    let x = right.vector;
    let mx = m * &x;
    let mut rho = left.vector.dot(&mx) / left.vector.dot(&x);
    // Rayleigh estimate lies in the enclosure up to rounding; clamp to it.
    rho = rho.clamp(right.lower, right.upper);

    let slack = 1e-12 * max_row.max(f64::MIN_POSITIVE);
    if rho < min_row - slack || rho > max_row + slack {
        return Err(Error::InternalInvariantViolation(format!(
            "Perron root {rho} outside row-sum bounds [{min_row}, {max_row}]"
        )));
    }

    let y = &left.vector / left.vector.dot(&x);
    let residual = (mx - &x * rho).amax();
    Ok(PerronTriple {
        rho,
        right: x,
        left: y,
        residual,
        iterations: right.iterations + left.iterations,
    })
}

pub fn perron_with(m: &DMatrix<f64>, config: &SolverConfig) -> Result<PerronTriple> {
    perron(m, config.tol, config.max_iter)
}

/// Spectral radius only.
pub fn perron_root(m: &DMatrix<f64>, config: &SolverConfig) -> Result<f64> {
    Ok(perron_with(m, config)?.rho)
}

struct SideResult {
    vector: DVector<f64>,
    lower: f64,
    upper: f64,
    iterations: usize,
}

fn power_side(m: &DMatrix<f64>, shift: f64, tol: f64, max_iter: usize, transpose: bool) -> Result<SideResult> {
    let n = m.nrows();
    let mut x = DVector::from_element(n, 1.0 / n as f64);
    let mut y = DVector::zeros(n);
    let mut gap = f64::INFINITY;
    for it in 1..=max_iter {
        if transpose {
            m.tr_mul_to(&x, &mut y);
        } else {
            m.mul_to(&x, &mut y);
        }
        y.axpy(shift, &x, 1.0);

        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for (yi, xi) in y.iter().zip(x.iter()) {
            let r = yi / xi;
            lo = lo.min(r);
            hi = hi.max(r);
        }
        let rho = 0.5 * (lo + hi) - shift;
        gap = hi - lo;
        let total = y.sum();
        x.copy_from(&y);
        x /= total;
        if gap <= tol * rho {
            return Ok(SideResult {
                vector: x,
                lower: lo - shift,
                upper: hi - shift,
                iterations: it,
            });
        }
    }
    Err(Error::no_convergence("power iteration", max_iter, gap, x.iter().copied().collect()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{dmatrix, dvector};

    fn normalized(v: &DVector<f64>) -> DVector<f64> {
        v / v.sum()
    }

    #[test]
    fn irreducibility_examples() {
        assert!(is_irreducible(&dmatrix![0.0, 1.0; 1.0, 0.0]));
        assert!(!is_irreducible(&dmatrix![0.0, 1.0; 0.0, 0.0]));
        assert!(!is_irreducible(&DMatrix::zeros(3, 3)));
        assert!(is_irreducible(&dmatrix![2.0]));
        assert!(!is_irreducible(&dmatrix![0.0]));
        // 3-cycle
        assert!(is_irreducible(&dmatrix![0.0, 1.0, 0.0; 0.0, 0.0, 1.0; 1.0, 0.0, 0.0]));
        // two 2-cycles joined one way only
        let m = dmatrix![
            0.0, 1.0, 1.0, 0.0;
            1.0, 0.0, 0.0, 0.0;
            0.0, 0.0, 0.0, 1.0;
            0.0, 0.0, 1.0, 0.0
        ];
        assert!(!is_irreducible(&m));
        let comp = strongly_connected_components(&m);
        assert_eq!(comp[0], comp[1]);
        assert_eq!(comp[2], comp[3]);
        assert_ne!(comp[0], comp[2]);
    }

    #[test]
    fn extended_a_matrix_is_irreducible() {
        // ΓV of the (V = [[0,.2],[.4,0]], γ = (1,2)) network with the
        // second individual constraint appended as row/column K+1.
        let a = dmatrix![
            0.0, 0.2, 0.1;
            0.8, 0.0, 0.2;
            0.8, 0.0, 0.2
        ];
        assert!(is_irreducible(&a));
    }

    #[test]
    fn perron_two_by_two_examples() {
        // λ² - λ - 0.75 = 0
        let t = perron(&dmatrix![1.0, 0.5; 1.5, 0.0], 1e-12, 100_000).unwrap();
        assert!((t.rho - 1.5).abs() < 1e-10);
        assert!((normalized(&t.right) - dvector![0.5, 0.5]).amax() < 1e-9);

        // λ² - 0.2λ - 0.24 = 0, left system 0.8 y2 = 0.6 y1
        let t = perron(&dmatrix![0.0, 0.3; 0.8, 0.2], 1e-12, 100_000).unwrap();
        assert!((t.rho - 0.6).abs() < 1e-10);
        assert!((normalized(&t.right) - dvector![1.0 / 3.0, 2.0 / 3.0]).amax() < 1e-9);
        assert!((normalized(&t.left) - dvector![4.0 / 7.0, 3.0 / 7.0]).amax() < 1e-9);

        // λ² - 0.15λ - 0.22 = 0
        let t = perron(&dmatrix![0.05, 0.25; 0.9, 0.1], 1e-12, 100_000).unwrap();
        assert!((t.rho - 0.55).abs() < 1e-10);
        assert!((normalized(&t.right) - dvector![1.0 / 3.0, 2.0 / 3.0]).amax() < 1e-9);
    }

    #[test]
    fn perron_normalization() {
        let t = perron(&dmatrix![0.0, 0.3; 0.8, 0.2], 1e-10, 100_000).unwrap();
        assert!((t.right.sum() - 1.0).abs() < 1e-14);
        assert!((t.left.dot(&t.right) - 1.0).abs() < 1e-14);
        assert!((t.weight().sum() - 1.0).abs() < 1e-14);
        assert!(t.residual < 1e-9);
    }

    #[test]
    fn perron_handles_periodic_matrices() {
        let t = perron(&dmatrix![0.0, 1.0; 1.0, 0.0], 1e-10, 100_000).unwrap();
        assert!((t.rho - 1.0).abs() < 1e-10);
        let cyc = dmatrix![0.0, 2.0, 0.0; 0.0, 0.0, 2.0; 2.0, 0.0, 0.0];
        let t = perron(&cyc, 1e-10, 100_000).unwrap();
        assert!((t.rho - 2.0).abs() < 1e-9);
    }

    #[test]
    fn perron_errors() {
        assert!(matches!(
            perron(&dmatrix![0.0, 1.0; 0.0, 0.0], 1e-10, 100),
            Err(Error::NotIrreducible { .. })
        ));
        match perron(&dmatrix![1.0, 0.5; 0.2, 1.0], 1e-14, 2) {
            Err(Error::NoConvergence { state, .. }) => assert_eq!(state.iterate.len(), 2),
            other => panic!("expected NoConvergence, got {other:?}"),
        }
    }
}
