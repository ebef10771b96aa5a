//! Small closed-form instances used throughout the tests and the docs.
//!
//! * `e1`: symmetric pair, `V = [[0, .5], [.5, 0]]`, `z = (1, 1)`, `γ = (1, 1)`,
//!   individual budgets `(1, 1)`. Balanced at `p̄ = (1, 1)`, `β = 1.5`, both
//!   constraints tight.
//! * `e2`: `V = [[0, .2], [.4, 0]]`, `z = (.1, .1)`, `γ = (1, 2)`, individual
//!   budgets `(1, 1)`. Balanced at `p̄ = (.5, 1)`, `β = .6`, only the second
//!   constraint tight.
//! * `e3`: the `e2` network under a sum budget of 2. Balanced at
//!   `p̄ = (2/3, 4/3)`, `β = .55`.

use nalgebra::{dmatrix, dvector};

use crate::model::{ConstraintPolytope, NetworkModel};

pub fn e1() -> (NetworkModel, ConstraintPolytope) {
    (
        NetworkModel::new(dmatrix![0.0, 0.5; 0.5, 0.0], dvector![1.0, 1.0], dvector![1.0, 1.0]).unwrap(),
        ConstraintPolytope::individual(dvector![1.0, 1.0]).unwrap(),
    )
}

pub fn e2() -> (NetworkModel, ConstraintPolytope) {
    (
        NetworkModel::new(dmatrix![0.0, 0.2; 0.4, 0.0], dvector![0.1, 0.1], dvector![1.0, 2.0]).unwrap(),
        ConstraintPolytope::individual(dvector![1.0, 1.0]).unwrap(),
    )
}

pub fn e3() -> (NetworkModel, ConstraintPolytope) {
    (e2().0, ConstraintPolytope::sum(2, 2.0).unwrap())
}
