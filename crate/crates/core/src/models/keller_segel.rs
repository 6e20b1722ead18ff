//! Flux-limited Keller-Segel equation, explicit central scheme.

use super::ModelParams;
use crate::error::{Error, Result};

#[derive(Clone, Debug, Default, PartialEq)]
pub struct KSEdgeState {
    pub rho: Vec<f64>,
}

/// Effective diffusivity `1 / (3λ)`.
pub fn diffusivity(params: &ModelParams) -> f64 {
    1.0 / (3.0 * params.lambda)
}

/// Largest stable explicit step on cells of width `dx`.
pub fn stable_dt(params: &ModelParams, dx: f64) -> f64 {
    let diff = dx * dx / (2.0 * diffusivity(params));
    let drift_speed = params.alpha * diffusivity(params);
    if drift_speed > 0.0 {
        diff.min(dx / drift_speed)
    } else {
        diff
    }
}

/// Physical flux `q = -(1/(3λ)) ∂x ρ + (α/(3λ)) m̄ ρ` across the face
/// between two cell values `dist` apart.
pub fn face_flux(params: &ModelParams, rho_l: f64, rho_r: f64, mbar_face: f64, dist: f64) -> f64 {
    let c = diffusivity(params);
    -c * (rho_r - rho_l) / dist + params.alpha * c * mbar_face * 0.5 * (rho_l + rho_r)
}

/// `ρ_i ← ρ_i - Δt/Δx (q_{i+1/2} - q_{i-1/2})`. `end_flux` holds the
/// physical flux through the left and right end faces.
pub fn keller_segel_step(
    state: &mut KSEdgeState,
    mbar: &[f64],
    params: &ModelParams,
    dt: f64,
    dx: f64,
    end_flux: [f64; 2],
) -> Result<()> {
    let n = state.rho.len();
    if mbar.len() != n {
        return Err(Error::DimensionMismatch("m̄ and ρ lengths differ".into()));
    }
    let limit = stable_dt(params, dx);
    if dt > limit * (1.0 + 1e-12) {
        return Err(Error::StabilityViolation { dt, limit });
    }
    let ratio = dt / dx;
    let rho = &mut state.rho;
    let mut faces = Vec::with_capacity(n + 1);
    faces.push(end_flux[0]);
    for i in 0..n.saturating_sub(1) {
        faces.push(face_flux(
            params,
            rho[i],
            rho[i + 1],
            0.5 * (mbar[i] + mbar[i + 1]),
            dx,
        ));
    }
    faces.push(end_flux[1]);
    for (i, r) in rho.iter_mut().enumerate() {
        *r -= ratio * (faces[i + 1] - faces[i]);
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
    fn three_cell_example() {
        let mut s = KSEdgeState {
            rho: vec![1.0, 0.0, 0.0],
        };
        keller_segel_step(&mut s, &[0.0; 3], &params(), 1.0, 1.0, [0.0, 0.0]).unwrap();
        let expected = [2.0 / 3.0, 1.0 / 3.0, 0.0];
        for (a, b) in s.rho.iter().zip(expected) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn uniform_unchanged_and_mass_conserved() {
        let p = params();
        let mut s = KSEdgeState { rho: vec![1.7; 5] };
        keller_segel_step(&mut s, &[0.0; 5], &p, 0.01, 0.2, [0.0; 2]).unwrap();
        assert!(s.rho.iter().all(|&r| (r - 1.7).abs() < 1e-15));

        let mut s = KSEdgeState {
            rho: (0..20).map(|i| (i as f64 * 0.4).sin() + 1.2).collect(),
        };
        let mbar: Vec<f64> = (0..20).map(|i| 0.9 * (i as f64 * 0.3).cos()).collect();
        let before: f64 = s.rho.iter().sum();
        keller_segel_step(&mut s, &mbar, &p, 0.01, 0.1, [0.0; 2]).unwrap();
        let after: f64 = s.rho.iter().sum();
        assert!((after - before).abs() < 1e-13);
    }

    #[test]
    fn unstable_step_is_rejected() {
        let err = keller_segel_step(
            &mut KSEdgeState { rho: vec![0.0; 3] },
            &[0.0; 3],
            &params(),
            2.0,
            1.0,
            [0.0; 2],
        )
        .unwrap_err();
        assert!(matches!(err, Error::StabilityViolation { .. }));
    }
}
