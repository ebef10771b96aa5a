//! Max-min SIR balancing under polytope power constraints.
//!
//! The balanced allocation is computed from the Perron roots of the
//! extended matrices ([`balancer`]) and can be cross-checked against a
//! derivative-free bisection ([`oracle`]), weighted utility maximization
//! ([`utility_opt`]) and a primal-dual saddle iteration ([`saddle`]).

pub mod balancer;
pub mod cli;
pub mod config;
pub mod error;
pub mod fixtures;
pub mod generate;
pub mod model;
pub mod neumann;
pub mod oracle;
pub mod projection;
pub mod saddle;
pub mod scenario;
pub mod spectral;
pub mod utility_opt;

pub use balancer::{solve_maxmin, MaxMinSolution};
pub use config::SolverConfig;
pub use error::{Error, Result};
pub use scenario::Scenario;
pub use model::{ConstraintPolytope, NetworkModel, RawChannel, Utility};
pub use utility_opt::WeightVector;
