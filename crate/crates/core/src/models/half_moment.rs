//! Linear half-moment model in the variables (ρ, q, ρ̂, q̂).
//!
//! The half moments are `ρ± = (ρ ± ερ̂)/2` and `q± = (εq ± q̂)/2`.

use super::stencil::{gradient, Halo};
use super::ModelParams;
use crate::error::{Error, Result};
use crate::hyperbolic::{eigendecompose, upwind_step_into, LinearHyperbolicSystem};

/// Parity of (ρ, q, ρ̂, q̂) under x → -x. Reflection swaps ρ⁺ and ρ⁻, so ρ̂
/// flips sign while q̂ does not.
pub const PARITY: [f64; 4] = [1.0, -1.0, -1.0, 1.0];

#[derive(Clone, Debug, Default, PartialEq)]
pub struct HalfMomentEdgeState {
    pub rho: Vec<f64>,
    pub q: Vec<f64>,
    pub rho_hat: Vec<f64>,
    pub q_hat: Vec<f64>,
}

impl HalfMomentEdgeState {
    pub fn cell(&self, i: usize) -> [f64; 4] {
        [self.rho[i], self.q[i], self.rho_hat[i], self.q_hat[i]]
    }

    fn set_cell(&mut self, i: usize, u: &[f64]) {
        self.rho[i] = u[0];
        self.q[i] = u[1];
        self.rho_hat[i] = u[2];
        self.q_hat[i] = u[3];
    }

    /// `(ρ⁺, ρ⁻, q⁺, q⁻)` of cell `i`.
    pub fn half_moments(&self, i: usize, eps: f64) -> [f64; 4] {
        let [rho, q, rho_hat, q_hat] = self.cell(i);
        [
            0.5 * (rho + eps * rho_hat),
            0.5 * (rho - eps * rho_hat),
            0.5 * (eps * q + q_hat),
            0.5 * (eps * q - q_hat),
        ]
    }
}

pub fn transport_matrix(phi: f64) -> [f64; 16] {
    [
        0.0,
        1.0,
        0.0,
        0.0, //
        -phi,
        0.0,
        0.0,
        6.0 * phi, //
        0.0,
        0.0,
        0.0,
        phi, //
        0.0,
        1.0,
        -1.0 / 6.0,
        0.0,
    ]
}

pub fn transport_system(phi: f64) -> Result<LinearHyperbolicSystem> {
    eigendecompose(4, &transport_matrix(phi))
}

/// Coefficients `(1 - ε²φ, 1/6 - ε²φ)` of the gradient terms left in the
/// relaxation sources after the transport part takes `φ`.
pub fn remainder_coefficients(eps: f64, phi: f64) -> (f64, f64) {
    let e2phi = eps * eps * phi;
    (1.0 - e2phi, 1.0 / 6.0 - e2phi)
}

pub fn hm_transport(
    state: &mut HalfMomentEdgeState,
    sys: &LinearHyperbolicSystem,
    dt: f64,
    dx: f64,
    left: [f64; 4],
    right: [f64; 4],
) -> Result<()> {
    let n = state.rho.len();
    if [state.q.len(), state.rho_hat.len(), state.q_hat.len()] != [n; 3] || sys.dim() != 4 {
        return Err(Error::DimensionMismatch(
            "half-moment state or system".into(),
        ));
    }
    let packed: Vec<f64> = (0..n).flat_map(|i| state.cell(i)).collect();
    let mut out = vec![0.0; 4 * n];
    upwind_step_into(&packed, sys, dt, dx, &left, &right, &mut out)?;
    for i in 0..n {
        state.set_cell(i, &out[4 * i..4 * i + 4]);
    }
    Ok(())
}

/// First relaxation phase: `q̂ ← ρ/2 + (q̂ - ρ/2) / (1 + Δtλ/ε²)`.
pub fn relax_q_hat(state: &mut HalfMomentEdgeState, params: &ModelParams, dt: f64) {
    let damp = 1.0 / (1.0 + params.lambda * params.stiff(dt));
    for (qh, &rho) in state.q_hat.iter_mut().zip(&state.rho) {
        let eq = 0.5 * rho;
        *qh = eq + (*qh - eq) * damp;
    }
}

/// Second phase on ρ̂ and q, with gradients of the relaxed q̂. `halo` holds
/// neighbours of q̂ and of `-ρ + 6q̂`, in that order.
pub fn relax_fluxes(
    state: &mut HalfMomentEdgeState,
    mbar: &[f64],
    params: &ModelParams,
    dt: f64,
    dx: f64,
    halo: [Halo; 2],
) {
    let a = params.stiff(dt);
    let denom = 1.0 + params.lambda * a;
    let (c_hat, c_q) = remainder_coefficients(params.epsilon, params.phi);
    let dq_hat = gradient(&state.q_hat, dx, halo[0]);
    let combo: Vec<f64> = state
        .rho
        .iter()
        .zip(&state.q_hat)
        .map(|(r, qh)| -r + 6.0 * qh)
        .collect();
    let dcombo = gradient(&combo, dx, halo[1]);
    for i in 0..state.rho.len() {
        let drift = params.alpha * mbar[i] * state.rho[i];
        let src_hat = 0.5 * drift - c_hat * dq_hat[i];
        state.rho_hat[i] = (state.rho_hat[i] + a * src_hat) / denom;
        let src_q = drift / 3.0 - c_q * dcombo[i];
        state.q[i] = (state.q[i] + a * src_q) / denom;
    }
}

/// Both phases without neighbours across the edge ends.
pub fn hm_relax(
    state: &mut HalfMomentEdgeState,
    mbar: &[f64],
    params: &ModelParams,
    dt: f64,
    dx: f64,
) {
    relax_q_hat(state, params, dt);
    relax_fluxes(state, mbar, params, dt, dx, [Halo::NONE; 2]);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{ModelKind, PhysicalParams};
    use proptest::prelude::*;

    fn params(eps: f64) -> ModelParams {
        ModelParams::new(ModelKind::HalfMoment, PhysicalParams::default(), eps, None).unwrap()
    }

    #[test]
    fn wave_speeds() {
        let s = transport_system(1.0 / 6.0).unwrap();
        let expected = [-0.894_296_84, -0.076_083_67, 0.076_083_67, 0.894_296_84];
        for (l, e) in s.eigenvalues().iter().zip(expected) {
            assert!((l - e).abs() < 1e-8, "{l} vs {e}");
        }
    }

    #[test]
    fn reflection_anticommutes_with_transport() {
        let m = transport_matrix(0.37);
        for i in 0..4 {
            for j in 0..4 {
                let smj = PARITY[i] * m[4 * i + j] * PARITY[j];
                assert_eq!(smj, -m[4 * i + j]);
            }
        }
    }

    #[test]
    fn constant_state_and_mass_balance() {
        let sys = transport_system(1.0 / 6.0).unwrap();
        let c = [1.0, 0.2, -0.1, 0.4];
        let mut s = HalfMomentEdgeState {
            rho: vec![c[0]; 6],
            q: vec![c[1]; 6],
            rho_hat: vec![c[2]; 6],
            q_hat: vec![c[3]; 6],
        };
        hm_transport(&mut s, &sys, 0.02, 0.05, c, c).unwrap();
        for i in 0..6 {
            for (a, b) in s.cell(i).iter().zip(c) {
                assert!((a - b).abs() < 1e-15);
            }
        }

        let n = 12;
        let dx = 0.1;
        let mut s = HalfMomentEdgeState {
            rho: (0..n).map(|i| 1.0 + 0.3 * (i as f64).sin()).collect(),
            q: (0..n).map(|i| 0.1 * (i as f64).cos()).collect(),
            rho_hat: (0..n).map(|i| 0.05 * i as f64).collect(),
            q_hat: (0..n).map(|i| 0.5 + 0.01 * i as f64).collect(),
        };
        let left = [0.3, 0.1, 0.0, 0.2];
        let right = [2.0, -0.4, 0.3, 1.0];
        let fl = sys.upwind_flux(&left, &s.cell(0))[0];
        let fr = sys.upwind_flux(&s.cell(n - 1), &right)[0];
        let before: f64 = s.rho.iter().sum::<f64>() * dx;
        let dt = 0.1;
        hm_transport(&mut s, &sys, dt, dx, left, right).unwrap();
        let after: f64 = s.rho.iter().sum::<f64>() * dx;
        assert!((after - before - dt * (fl - fr)).abs() < 1e-14);
    }

    #[test]
    fn relax_scalar_example() {
        let p = params(1.0);
        let mut s = HalfMomentEdgeState {
            rho: vec![1.0; 3],
            q: vec![0.0; 3],
            rho_hat: vec![0.0; 3],
            q_hat: vec![0.0; 3],
        };
        hm_relax(&mut s, &[0.0; 3], &p, 1.0, 0.1);
        assert_eq!(s.q_hat, vec![0.25; 3]);
        assert_eq!(s.rho, vec![1.0; 3]);
    }

    #[test]
    fn relax_keeps_density_bitwise() {
        let p = params(0.1);
        let rho: Vec<f64> = (0..9).map(|i| 0.3 + (i as f64 * 0.9).sin().abs()).collect();
        let mut s = HalfMomentEdgeState {
            rho: rho.clone(),
            q: vec![0.3; 9],
            rho_hat: vec![-0.2; 9],
            q_hat: vec![0.1; 9],
        };
        hm_relax(&mut s, &[0.4; 9], &p, 0.01, 0.1);
        assert_eq!(s.rho, rho);
    }

    #[test]
    fn relax_fixed_point() {
        let p = params(0.5);
        let n = 7;
        let dx = 0.2;
        let rho: Vec<f64> = (0..n).map(|i| 1.0 + 0.1 * (i * i) as f64).collect();
        let mbar: Vec<f64> = (0..n).map(|i| 0.1 * i as f64 - 0.3).collect();
        let q_hat: Vec<f64> = rho.iter().map(|r| 0.5 * r).collect();
        let (c_hat, c_q) = remainder_coefficients(p.epsilon, p.phi);
        let dqh = gradient(&q_hat, dx, Halo::NONE);
        let combo: Vec<f64> = rho
            .iter()
            .zip(&q_hat)
            .map(|(r, qh)| -r + 6.0 * qh)
            .collect();
        let dc = gradient(&combo, dx, Halo::NONE);
        let rho_hat: Vec<f64> = (0..n)
            .map(|i| (0.5 * p.alpha * mbar[i] * rho[i] - c_hat * dqh[i]) / p.lambda)
            .collect();
        let q: Vec<f64> = (0..n)
            .map(|i| (p.alpha / 3.0 * mbar[i] * rho[i] - c_q * dc[i]) / p.lambda)
            .collect();
        let mut s = HalfMomentEdgeState {
            rho,
            q,
            rho_hat,
            q_hat,
        };
        let before = s.clone();
        hm_relax(&mut s, &mbar, &p, 0.3, dx);
        for i in 0..n {
            for (a, b) in s.cell(i).iter().zip(before.cell(i)) {
                assert!((a - b).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn remainder_at_unit_scaling() {
        let (c_hat, c_q) = remainder_coefficients(1.0, 1.0 / 6.0);
        assert!((c_hat - 5.0 / 6.0).abs() < 1e-15);
        assert_eq!(c_q, 0.0);
    }

    proptest! {
        // transport part plus relaxation remainder recombine to the unsplit
        // coefficients 1/ε² and 1/(6ε²)
        #[test]
        fn split_recombines(eps in 1e-3f64..1.0, frac in 0.0f64..1.0) {
            let phi = frac / (6.0 * eps * eps);
            let (c_hat, c_q) = remainder_coefficients(eps, phi);
            let e2 = eps * eps;
            prop_assert!(((phi + c_hat / e2) * e2 - 1.0).abs() < 1e-12);
            prop_assert!(((phi + c_q / e2) * e2 - 1.0 / 6.0).abs() < 1e-12);
        }
    }

    #[test]
    fn half_moments_recombine() {
        let s = HalfMomentEdgeState {
            rho: vec![1.3],
            q: vec![0.2],
            rho_hat: vec![-0.7],
            q_hat: vec![0.4],
        };
        let [rp, rm, qp, qm] = s.half_moments(0, 0.3);
        assert_eq!(rp + rm, 1.3);
        assert!((qp + qm - 0.3 * 0.2).abs() < 1e-16);
    }
}
