//! Chemoattractant `∂t m - D ∂xx m = γ_ρ ρ - γ_m m`, forward Euler with
//! central differences.

use super::ModelParams;
use crate::error::{Error, Result};

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ChemoEdgeState {
    pub m: Vec<f64>,
}

pub fn stable_dt(params: &ModelParams, dx: f64) -> f64 {
    dx * dx / (2.0 * params.diffusivity)
}

/// `m_i ← m_i - Δt/Δx (J_{i+1/2} - J_{i-1/2}) + Δt (γ_ρ ρ_i - γ_m m_i)` with
/// `J = -D ∂x m`. `end_flux` holds `J` through the left and right end faces;
/// zero on both sides is a homogeneous Neumann edge.
pub fn chemo_step(
    state: &mut ChemoEdgeState,
    rho: &[f64],
    params: &ModelParams,
    dt: f64,
    dx: f64,
    end_flux: [f64; 2],
) -> Result<()> {
    let n = state.m.len();
    if rho.len() != n {
        return Err(Error::DimensionMismatch("ρ and m lengths differ".into()));
    }
    let limit = stable_dt(params, dx);
    if dt > limit * (1.0 + 1e-12) {
        return Err(Error::StabilityViolation { dt, limit });
    }
    let m = &mut state.m;
    let d = params.diffusivity / dx;
    let mut faces = Vec::with_capacity(n + 1);
    faces.push(end_flux[0]);
    for i in 0..n.saturating_sub(1) {
        faces.push(-d * (m[i + 1] - m[i]));
    }
    faces.push(end_flux[1]);
    let ratio = dt / dx;
    for (i, mi) in m.iter_mut().enumerate() {
        let source = params.gamma_rho * rho[i] - params.gamma_m * *mi;
        *mi += -ratio * (faces[i + 1] - faces[i]) + dt * source;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{ModelKind, PhysicalParams};

    fn params() -> ModelParams {
        ModelParams::new(ModelKind::KellerSegel, PhysicalParams::default(), 1.0, None).unwrap()
    }

    #[test]
    fn zero_stays_zero() {
        let mut s = ChemoEdgeState { m: vec![0.0; 4] };
        chemo_step(&mut s, &[0.0; 4], &params(), 0.001, 0.1, [0.0; 2]).unwrap();
        assert!(s.m.iter().all(|&m| m == 0.0));
    }

    #[test]
    fn uniform_equilibrium_is_fixed() {
        let p = params();
        let m_star = p.gamma_rho * 2.0 / p.gamma_m;
        let mut s = ChemoEdgeState { m: vec![m_star; 5] };
        chemo_step(&mut s, &[2.0; 5], &p, 0.004, 0.1, [0.0; 2]).unwrap();
        assert!(s.m.iter().all(|&m| (m - m_star).abs() < 1e-13));
    }

    #[test]
    fn scalar_decay() {
        let p = params();
        let mut s = ChemoEdgeState { m: vec![1.0; 3] };
        chemo_step(&mut s, &[0.0; 3], &p, 0.1, 1.0, [0.0; 2]).unwrap();
        assert!(s.m.iter().all(|&m| (m - 0.99).abs() < 1e-15));
    }

    #[test]
    fn interior_matches_laplacian() {
        let p = params();
        let m0 = vec![0.0, 1.0, 4.0, 9.0];
        let mut s = ChemoEdgeState { m: m0.clone() };
        let dt = 0.001;
        let dx = 0.1;
        chemo_step(&mut s, &[0.0; 4], &p, dt, dx, [0.0; 2]).unwrap();
        let lap = (m0[2] - 2.0 * m0[1] + m0[0]) / (dx * dx);
        let expected = m0[1] + dt * (p.diffusivity * lap - p.gamma_m * m0[1]);
        assert!((s.m[1] - expected).abs() < 1e-12);
    }

    #[test]
    fn unstable_step_is_rejected() {
        let err = chemo_step(
            &mut ChemoEdgeState { m: vec![0.0; 3] },
            &[0.0; 3],
            &params(),
            0.01,
            0.1,
            [0.0; 2],
        )
        .unwrap_err();
        assert!(matches!(err, Error::StabilityViolation { .. }));
    }
}
