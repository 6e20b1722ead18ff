//! Node coupling: admissible coupling matrices, per-model node solvers in
//! characteristic variables, and the small-ε transformation of the coupling
//! conditions.
//!
//! All solvers work in the node-local frame in which every incident edge
//! points away from the node. Callers reflect traces of edges that end at
//! the node before the solve and reflect the returned node states back.

mod cattaneo;
mod characteristic;
mod half_moment;
mod kinetic;
mod limit;
mod parabolic;

pub use cattaneo::{cattaneo_conditions, solve_node_cattaneo, AlphaWeights, CattaneoCoupling};
pub use characteristic::CharacteristicNodeSolver;
pub use half_moment::{half_moment_conditions, solve_node_halfmoment};
pub use kinetic::{
    kinetic_inflow_state, kinetic_node_matrix, solve_node_kinetic, KineticNodeSolver,
};
pub use limit::{epsilon_limit_check, BlockCondition, LimitSystem};
pub use parabolic::{node_gradients, solve_node_chemo, solve_node_keller_segel, ParabolicNode};

use nalgebra::DMatrix;

use crate::error::{Error, Result};

const TOL: f64 = 1e-12;

/// Nonnegative matrix with zero diagonal and unit row and column sums.
#[derive(Clone, Debug, PartialEq)]
pub struct CouplingMatrix {
    a: DMatrix<f64>,
}

impl CouplingMatrix {
    pub fn new(a: DMatrix<f64>) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n || n < 2 {
            return Err(Error::InvalidCoupling(format!(
                "coupling matrix must be square of order >= 2, got {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        for i in 0..n {
            if a[(i, i)] != 0.0 {
                return Err(Error::InvalidCoupling(format!(
                    "nonzero diagonal entry {i}"
                )));
            }
            for j in 0..n {
                if !(a[(i, j)] >= 0.0 && a[(i, j)].is_finite()) {
                    return Err(Error::InvalidCoupling(format!(
                        "entry ({i},{j}) = {} is negative",
                        a[(i, j)]
                    )));
                }
            }
            let row: f64 = a.row(i).sum();
            let col: f64 = a.column(i).sum();
            if (row - 1.0).abs() > TOL || (col - 1.0).abs() > TOL {
                return Err(Error::InvalidCoupling(format!(
                    "row/column {i} sums to {row}/{col}, expected 1"
                )));
            }
        }
        Ok(CouplingMatrix { a })
    }

    pub fn order(&self) -> usize {
        self.a.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.a[(i, j)]
    }
}

/// Uniform redistribution `a_ij = 1/(N-1)`, `a_ii = 0`.
pub fn kinetic_coupling_matrix(n: usize) -> Result<CouplingMatrix> {
    if n < 2 {
        return Err(Error::InvalidCoupling(format!(
            "a coupling node needs degree >= 2, got {n}"
        )));
    }
    let off = 1.0 / (n - 1) as f64;
    CouplingMatrix::new(DMatrix::from_fn(
        n,
        n,
        |i, j| if i == j { 0.0 } else { off },
    ))
}
