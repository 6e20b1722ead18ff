use nalgebra::DMatrix;

use super::characteristic::CharacteristicNodeSolver;
use super::limit::{epsilon_limit_check, BlockCondition};
use super::CouplingMatrix;
use crate::error::Result;
use crate::hyperbolic::LinearHyperbolicSystem;

/// `ρ⁺ = A ρ⁻` and `q⁺ = -A q⁻` written in (ρ, q, ρ̂, q̂):
/// `(I - A) ρ + ε (I + A) ρ̂ = 0` and `(I - A) q̂ + ε (I + A) q = 0`.
pub fn half_moment_conditions(a: &CouplingMatrix) -> [BlockCondition; 2] {
    let n = a.order();
    let id = DMatrix::<f64>::identity(n, n);
    let minus = &id - a.matrix();
    let plus = &id + a.matrix();
    [
        BlockCondition {
            x: 0,
            y: 2,
            r: minus.clone(),
            s: plus.clone(),
        },
        BlockCondition {
            x: 3,
            y: 1,
            r: minus,
            s: plus,
        },
    ]
}

pub(crate) fn condition_rows(a: &CouplingMatrix, eps: f64) -> Result<DMatrix<f64>> {
    let n = a.order();
    let [b1, b2] = half_moment_conditions(a);
    let r1 = epsilon_limit_check(&b1, eps)?.rows(4);
    let r2 = epsilon_limit_check(&b2, eps)?.rows(4);
    let mut rows = DMatrix::zeros(2 * n, 4 * n);
    rows.rows_mut(0, n).copy_from(&r1);
    rows.rows_mut(n, n).copy_from(&r2);
    Ok(rows)
}

impl CharacteristicNodeSolver {
    pub fn half_moment(
        sys: &LinearHyperbolicSystem,
        a: &CouplingMatrix,
        eps: f64,
        node: usize,
    ) -> Result<Self> {
        Self::new(sys, a.order(), condition_rows(a, eps)?, node)
    }
}

/// Node states `(ρ, q, ρ̂, q̂)` per edge from local-frame first-cell traces.
pub fn solve_node_halfmoment(
    sys: &LinearHyperbolicSystem,
    traces: &[[f64; 4]],
    a: &CouplingMatrix,
    eps: f64,
) -> Result<Vec<[f64; 4]>> {
    let solver = CharacteristicNodeSolver::half_moment(sys, a, eps, usize::MAX)?;
    let flat: Vec<f64> = traces.iter().flatten().copied().collect();
    let out = solver.solve(&flat)?;
    Ok(out.chunks(4).map(|c| [c[0], c[1], c[2], c[3]]).collect())
}
