//! Edge evolutions for the model hierarchy: kinetic (even/odd parities),
//! half-moment, Cattaneo (P1), Keller-Segel, and the chemoattractant.
//!
//! Every hyperbolic model is advanced by a transport step (explicit upwind
//! in characteristic variables) followed by a relaxation step (backward
//! Euler on the stiff sources). Time step restrictions therefore do not
//! depend on the scaling parameter ε.

pub mod cattaneo;
pub mod chemo;
pub mod half_moment;
pub mod keller_segel;
pub mod kinetic;
pub mod stencil;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use cattaneo::P1EdgeState;
pub use chemo::ChemoEdgeState;
pub use half_moment::HalfMomentEdgeState;
pub use keller_segel::KSEdgeState;
pub use kinetic::{KineticEdgeState, VelocityGrid};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    Kinetic,
    HalfMoment,
    Cattaneo,
    KellerSegel,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [
        ModelKind::Kinetic,
        ModelKind::HalfMoment,
        ModelKind::Cattaneo,
        ModelKind::KellerSegel,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Kinetic => "kinetic",
            ModelKind::HalfMoment => "half-moment",
            ModelKind::Cattaneo => "cattaneo",
            ModelKind::KellerSegel => "keller-segel",
        }
    }

    pub fn is_hyperbolic(self) -> bool {
        self != ModelKind::KellerSegel
    }

    /// Upper bound of the admissible relaxation speed, as a multiple of 1/ε².
    fn phi_bound_factor(self) -> f64 {
        match self {
            ModelKind::Kinetic => 1.0,
            ModelKind::Cattaneo => 1.0 / 3.0,
            ModelKind::HalfMoment => 1.0 / 6.0,
            ModelKind::KellerSegel => f64::INFINITY,
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "kinetic" => Ok(ModelKind::Kinetic),
            "half-moment" | "halfmoment" | "hm" => Ok(ModelKind::HalfMoment),
            "cattaneo" | "p1" => Ok(ModelKind::Cattaneo),
            "keller-segel" | "ks" => Ok(ModelKind::KellerSegel),
            other => Err(Error::Config(format!("unknown model '{other}'"))),
        }
    }
}

/// Model constants that do not depend on the scaling.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhysicalParams {
    /// Turning rate λ.
    pub lambda: f64,
    /// Chemotactic sensitivity α.
    pub alpha: f64,
    /// Chemoattractant diffusivity D.
    pub diffusivity: f64,
    /// Chemoattractant production rate γ_ρ.
    pub gamma_rho: f64,
    /// Chemoattractant decay rate γ_m.
    pub gamma_m: f64,
}

impl Default for PhysicalParams {
    fn default() -> Self {
        PhysicalParams {
            lambda: 1.0,
            alpha: 1.0,
            diffusivity: 1.0,
            gamma_rho: 1.0,
            gamma_m: 0.1,
        }
    }
}

/// Validated constants of one model run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub lambda: f64,
    pub alpha: f64,
    pub diffusivity: f64,
    pub gamma_rho: f64,
    pub gamma_m: f64,
    /// Scaling parameter ε.
    pub epsilon: f64,
    /// Relaxation speed φ; unused by Keller-Segel.
    pub phi: f64,
}

impl ModelParams {
    /// Validate and assemble. `phi = None` selects the model's default
    /// relaxation speed (α²/λ², α²/(3λ²), α²/(6λ²)).
    pub fn new(
        kind: ModelKind,
        physical: PhysicalParams,
        epsilon: f64,
        phi: Option<f64>,
    ) -> Result<Self> {
        let PhysicalParams {
            lambda,
            alpha,
            diffusivity,
            gamma_rho,
            gamma_m,
        } = physical;
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!(
                    "{name} must be positive, got {v}"
                )))
            }
        };
        let non_negative = |name: &str, v: f64| {
            if v.is_finite() && v >= 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!(
                    "{name} must be non-negative, got {v}"
                )))
            }
        };
        positive("lambda", lambda)?;
        positive("diffusivity", diffusivity)?;
        positive("epsilon", epsilon)?;
        non_negative("alpha", alpha)?;
        non_negative("gamma_rho", gamma_rho)?;
        non_negative("gamma_m", gamma_m)?;
        if epsilon * alpha > lambda * (1.0 + 1e-12) {
            return Err(Error::InvalidParameter(format!(
                "epsilon = {epsilon} exceeds lambda/alpha = {}",
                lambda / alpha
            )));
        }
        let phi = phi.unwrap_or_else(|| Self::default_phi(kind, lambda, alpha));
        let params = ModelParams {
            lambda,
            alpha,
            diffusivity,
            gamma_rho,
            gamma_m,
            epsilon,
            phi,
        };
        params.validate_phi(kind)?;
        Ok(params)
    }

    /// Default relaxation speed of each model.
    pub fn default_phi(kind: ModelKind, lambda: f64, alpha: f64) -> f64 {
        let base = alpha * alpha / (lambda * lambda);
        match kind {
            ModelKind::Kinetic => base,
            ModelKind::Cattaneo => base / 3.0,
            ModelKind::HalfMoment => base / 6.0,
            ModelKind::KellerSegel => 0.0,
        }
    }

    /// Admissible range `0 < φ <= c/ε²` for the hyperbolic models.
    pub fn validate_phi(&self, kind: ModelKind) -> Result<()> {
        if !kind.is_hyperbolic() {
            return Ok(());
        }
        let upper = kind.phi_bound_factor() / (self.epsilon * self.epsilon);
        if !(self.phi.is_finite() && self.phi > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "relaxation speed phi must be positive for the {kind} model, got {}",
                self.phi
            )));
        }
        if self.phi > upper * (1.0 + 1e-12) {
            return Err(Error::InvalidParameter(format!(
                "relaxation speed phi = {} exceeds {upper} for the {kind} model",
                self.phi
            )));
        }
        Ok(())
    }

    pub fn physical(&self) -> PhysicalParams {
        PhysicalParams {
            lambda: self.lambda,
            alpha: self.alpha,
            diffusivity: self.diffusivity,
            gamma_rho: self.gamma_rho,
            gamma_m: self.gamma_m,
        }
    }

    /// `dt / ε²`, the stiff relaxation weight.
    pub(crate) fn stiff(&self, dt: f64) -> f64 {
        dt / (self.epsilon * self.epsilon)
    }
}

/// Per-edge cell unknowns of any model.
#[derive(Clone, Debug, PartialEq)]
pub enum EdgeModelState {
    Kinetic(KineticEdgeState),
    HalfMoment(HalfMomentEdgeState),
    Cattaneo(P1EdgeState),
    KellerSegel(KSEdgeState),
}

impl EdgeModelState {
    pub fn kind(&self) -> ModelKind {
        match self {
            EdgeModelState::Kinetic(_) => ModelKind::Kinetic,
            EdgeModelState::HalfMoment(_) => ModelKind::HalfMoment,
            EdgeModelState::Cattaneo(_) => ModelKind::Cattaneo,
            EdgeModelState::KellerSegel(_) => ModelKind::KellerSegel,
        }
    }

    pub fn cells(&self) -> usize {
        match self {
            EdgeModelState::Kinetic(s) => s.cells(),
            EdgeModelState::HalfMoment(s) => s.rho.len(),
            EdgeModelState::Cattaneo(s) => s.rho.len(),
            EdgeModelState::KellerSegel(s) => s.rho.len(),
        }
    }

    /// Cell densities ρ_i.
    pub fn density(&self, vgrid: &VelocityGrid) -> Vec<f64> {
        match self {
            EdgeModelState::Kinetic(s) => kinetic::density(s, vgrid),
            EdgeModelState::HalfMoment(s) => s.rho.clone(),
            EdgeModelState::Cattaneo(s) => s.rho.clone(),
            EdgeModelState::KellerSegel(s) => s.rho.clone(),
        }
    }

    /// Named per-cell output columns (ρ first).
    pub fn columns(&self, vgrid: &VelocityGrid) -> Vec<(&'static str, Vec<f64>)> {
        match self {
            EdgeModelState::Kinetic(s) => {
                let (rho, q) = kinetic::moments_kinetic(s, vgrid);
                vec![("rho", rho), ("q", q)]
            }
            EdgeModelState::HalfMoment(s) => vec![
                ("rho", s.rho.clone()),
                ("q", s.q.clone()),
                ("rho_hat", s.rho_hat.clone()),
                ("q_hat", s.q_hat.clone()),
            ],
            EdgeModelState::Cattaneo(s) => vec![("rho", s.rho.clone()), ("q", s.q.clone())],
            EdgeModelState::KellerSegel(s) => vec![("rho", s.rho.clone())],
        }
    }

    pub fn all_finite(&self) -> bool {
        let finite = |v: &[f64]| {
            // x * 0 is zero exactly when x is finite; four lanes vectorize
            let mut acc = [0.0f64; 4];
            let chunks = v.chunks_exact(4);
            let rest: f64 = chunks.remainder().iter().map(|x| x * 0.0).sum();
            for c in chunks {
                for (a, x) in acc.iter_mut().zip(c) {
                    *a += x * 0.0;
                }
            }
            acc.iter().sum::<f64>() + rest == 0.0
        };
        match self {
            EdgeModelState::Kinetic(s) => finite(&s.r) && finite(&s.j),
            EdgeModelState::HalfMoment(s) => {
                finite(&s.rho) && finite(&s.q) && finite(&s.rho_hat) && finite(&s.q_hat)
            }
            EdgeModelState::Cattaneo(s) => finite(&s.rho) && finite(&s.q),
            EdgeModelState::KellerSegel(s) => finite(&s.rho),
        }
    }
}

/// Equilibrium initial state `f = ρ0 / 2` expressed in each model's unknowns.
pub fn init_from_density(
    rho0: &[f64],
    kind: ModelKind,
    vgrid: &VelocityGrid,
) -> Result<EdgeModelState> {
    if let Some(&bad) = rho0.iter().find(|&&r| !(r >= 0.0 && r.is_finite())) {
        return Err(Error::NegativeDensity {
            edge: usize::MAX,
            value: bad,
        });
    }
    let n = rho0.len();
    Ok(match kind {
        ModelKind::Kinetic => {
            let mut s = KineticEdgeState::zeros(vgrid.count(), n);
            for k in 0..vgrid.count() {
                s.r_row_mut(k)
                    .iter_mut()
                    .zip(rho0)
                    .for_each(|(r, &p)| *r = 0.5 * p);
            }
            EdgeModelState::Kinetic(s)
        }
        ModelKind::HalfMoment => EdgeModelState::HalfMoment(HalfMomentEdgeState {
            rho: rho0.to_vec(),
            q: vec![0.0; n],
            rho_hat: vec![0.0; n],
            q_hat: rho0.iter().map(|p| 0.5 * p).collect(),
        }),
        ModelKind::Cattaneo => EdgeModelState::Cattaneo(P1EdgeState {
            rho: rho0.to_vec(),
            q: vec![0.0; n],
        }),
        ModelKind::KellerSegel => EdgeModelState::KellerSegel(KSEdgeState { rho: rho0.to_vec() }),
    })
}
