/// Tolerances and iteration budgets shared by all solvers.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Relative Collatz-Wielandt bracket width for Perron solves.
    pub tol: f64,
    /// Iteration cap for power iteration and Neumann series.
    pub max_iter: usize,
    /// Relative slack on g_n(p) when collecting active constraints.
    pub tol_active: f64,
    /// Stationarity threshold for the gradient methods.
    pub grad_tol: f64,
    /// Iteration cap for `maximize_f`.
    pub ascent_max_iter: usize,
    /// Relative distance to the reference power vector that ends the saddle iteration.
    pub primal_tol: f64,
    /// Initial step of the diminishing saddle step size.
    pub alpha0: f64,
    /// Iteration cap for the saddle iteration.
    pub saddle_max_iter: usize,
    /// Evaluate the saddle gradients at a look-ahead point (extragradient).
    pub saddle_extrapolate: bool,
    /// Lower bound on each weight inside the simplex.
    pub w_floor: f64,
    /// Power floor relative to the smallest budget.
    pub p_floor_rel: f64,
    /// Bisection bracket width for the oracle.
    pub tol_t: f64,
    /// Sweep cap for Dykstra's projection.
    pub dykstra_max_sweeps: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 100_000,
            tol_active: 1e-7,
            grad_tol: 1e-10,
            ascent_max_iter: 200_000,
            primal_tol: 1e-3,
            alpha0: 1.0,
            saddle_max_iter: 50_000,
            saddle_extrapolate: true,
            w_floor: 1e-9,
            p_floor_rel: 1e-12,
            tol_t: 1e-10,
            dykstra_max_sweeps: 10_000,
        }
    }
}
