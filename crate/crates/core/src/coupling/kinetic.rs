//! Kinetic node conditions `f⁺ = A f⁻` for every velocity.
//!
//! With `w± = j ± √φ r` the conditions read
//! `(a I - b A) w⁺ = (b I - a A) w⁻`, `a = 1/(2√φ) + ε/2`,
//! `b = 1/(2√φ) - ε/2`. The matrix does not depend on the velocity, so it is
//! factored once per node.

use nalgebra::{DMatrix, DVector, Dyn, LU};

use super::CouplingMatrix;
use crate::error::{Error, Result};

/// `a I - b A` of the kinetic node system.
pub fn kinetic_node_matrix(a: &CouplingMatrix, eps: f64, phi: f64) -> DMatrix<f64> {
    let (ca, cb) = coefficients(eps, phi);
    let n = a.order();
    DMatrix::<f64>::identity(n, n) * ca - a.matrix() * cb
}

fn coefficients(eps: f64, phi: f64) -> (f64, f64) {
    let h = 0.5 / phi.sqrt();
    (h + 0.5 * eps, h - 0.5 * eps)
}

#[derive(Clone, Debug)]
pub struct KineticNodeSolver {
    n: usize,
    sqrt_phi: f64,
    ca: f64,
    cb: f64,
    a: DMatrix<f64>,
    lu: LU<f64, Dyn, Dyn>,
}

impl KineticNodeSolver {
    pub fn new(a: &CouplingMatrix, eps: f64, phi: f64, node: usize) -> Result<Self> {
        if !(eps > 0.0 && phi > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "kinetic node solve needs eps > 0 and phi > 0, got {eps}, {phi}"
            )));
        }
        let n = a.order();
        let (ca, cb) = coefficients(eps, phi);
        let mut k = kinetic_node_matrix(a, eps, phi);
        // the column sums of a I - b A are all ε; replace the last row by the
        // summed equation divided by ε
        k.row_mut(n - 1).fill(1.0);
        let lu = k.lu();
        let smallest = lu
            .u()
            .diagonal()
            .iter()
            .fold(f64::INFINITY, |m, p| m.min(p.abs()));
        if !(smallest > 1e-13) {
            return Err(Error::SingularSystem { node });
        }
        Ok(KineticNodeSolver {
            n,
            sqrt_phi: phi.sqrt(),
            ca,
            cb,
            a: a.matrix().clone(),
            lu,
        })
    }

    pub fn degree(&self) -> usize {
        self.n
    }

    /// Node states per edge and velocity from local-frame first-cell traces
    /// `traces[edge][k] = (r, j)`.
    pub fn solve(&self, traces: &[&[[f64; 2]]]) -> Result<Vec<Vec<[f64; 2]>>> {
        let n = self.n;
        if traces.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "{} traces for a node of degree {n}",
                traces.len()
            )));
        }
        let nv = traces[0].len();
        if traces.iter().any(|t| t.len() != nv) {
            return Err(Error::DimensionMismatch(
                "velocity counts differ between edges".into(),
            ));
        }
        let s = self.sqrt_phi;
        let mut out = vec![vec![[0.0; 2]; nv]; n];
        let mut w_minus = DVector::<f64>::zeros(n);
        for k in 0..nv {
            for e in 0..n {
                let [r, j] = traces[e][k];
                w_minus[e] = j - s * r;
            }
            let aw = &self.a * &w_minus;
            let mut rhs = &w_minus * self.cb - aw * self.ca;
            rhs[n - 1] = -w_minus.sum();
            let w_plus = self
                .lu
                .solve(&rhs)
                .ok_or(Error::SingularSystem { node: usize::MAX })?;
            for e in 0..n {
                let (wp, wm) = (w_plus[e], w_minus[e]);
                out[e][k] = [(wp - wm) / (2.0 * s), 0.5 * (wp + wm)];
            }
        }
        Ok(out)
    }

    /// `f⁺ = r + εj` at the node for a solved state, for positivity checks.
    pub fn incoming_distribution(&self, state: [f64; 2]) -> f64 {
        let wp = state[1] + self.sqrt_phi * state[0];
        let wm = state[1] - self.sqrt_phi * state[0];
        self.ca * wp - self.cb * wm
    }
}

/// Node state of an open end where the entering distribution is
/// prescribed: `f⁺ = f_in` with the outgoing characteristic of `trace`.
pub fn kinetic_inflow_state(trace: [f64; 2], f_in: f64, eps: f64, phi: f64) -> [f64; 2] {
    let (ca, cb) = coefficients(eps, phi);
    let s = phi.sqrt();
    let wm = trace[1] - s * trace[0];
    let wp = (f_in + cb * wm) / ca;
    [(wp - wm) / (2.0 * s), 0.5 * (wp + wm)]
}

/// One-shot kinetic node solve.
pub fn solve_node_kinetic(
    traces: &[&[[f64; 2]]],
    a: &CouplingMatrix,
    eps: f64,
    phi: f64,
) -> Result<Vec<Vec<[f64; 2]>>> {
    KineticNodeSolver::new(a, eps, phi, usize::MAX)?.solve(traces)
}
