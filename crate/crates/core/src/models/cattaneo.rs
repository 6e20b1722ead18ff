//! Cattaneo (P1) model in relaxation form.

use super::stencil::{gradient, Halo};
use super::ModelParams;
use crate::error::{Error, Result};
use crate::hyperbolic::{eigendecompose, upwind_step_into, LinearHyperbolicSystem};

/// Parity of (ρ, q) under x → -x.
pub const PARITY: [f64; 2] = [1.0, -1.0];

#[derive(Clone, Debug, Default, PartialEq)]
pub struct P1EdgeState {
    pub rho: Vec<f64>,
    pub q: Vec<f64>,
}

impl P1EdgeState {
    pub fn cell(&self, i: usize) -> [f64; 2] {
        [self.rho[i], self.q[i]]
    }
}

pub fn transport_matrix(phi: f64) -> [f64; 4] {
    [0.0, 1.0, phi, 0.0]
}

pub fn transport_system(phi: f64) -> Result<LinearHyperbolicSystem> {
    eigendecompose(2, &transport_matrix(phi))
}

/// Upwind step of `[[0, 1], [φ, 0]]` with ghost states beyond each end.
pub fn p1_transport(
    state: &mut P1EdgeState,
    sys: &LinearHyperbolicSystem,
    dt: f64,
    dx: f64,
    left: [f64; 2],
    right: [f64; 2],
) -> Result<()> {
    let n = state.rho.len();
    if state.q.len() != n || sys.dim() != 2 {
        return Err(Error::DimensionMismatch("P1 state or system".into()));
    }
    let packed: Vec<f64> = (0..n).flat_map(|i| state.cell(i)).collect();
    let mut out = vec![0.0; 2 * n];
    upwind_step_into(&packed, sys, dt, dx, &left, &right, &mut out)?;
    for i in 0..n {
        state.rho[i] = out[2 * i];
        state.q[i] = out[2 * i + 1];
    }
    Ok(())
}

/// Backward Euler on the flux:
/// `q ← (q + Δt/ε² ((α/3) m̄ ρ - (1/3 - ε²φ) D_x ρ)) / (1 + Δtλ/ε²)`.
pub fn p1_relax(
    state: &mut P1EdgeState,
    mbar: &[f64],
    params: &ModelParams,
    dt: f64,
    dx: f64,
    halo: Halo,
) {
    let a = params.stiff(dt);
    let denom = 1.0 + params.lambda * a;
    let diff = 1.0 / 3.0 - params.epsilon * params.epsilon * params.phi;
    let drho = gradient(&state.rho, dx, halo);
    for i in 0..state.rho.len() {
        let src = params.alpha / 3.0 * mbar[i] * state.rho[i] - diff * drho[i];
        state.q[i] = (state.q[i] + a * src) / denom;
    }
}
