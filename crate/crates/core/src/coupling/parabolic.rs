//! Continuity of the node value plus flux balance for the parabolic
//! equations. Fluxes are reported into each edge in the local frame.

use crate::error::{Error, Result};
use crate::models::stencil::limit;

#[derive(Clone, Debug, PartialEq)]
pub struct ParabolicNode {
    pub value: f64,
    pub fluxes: Vec<f64>,
}

/// `m*` balancing `Σ D (m_i - m*) / (Δx_i / 2) = 0`; fluxes
/// `J_i = -D (m_i - m*) / (Δx_i / 2)`.
pub fn solve_node_chemo(first: &[f64], dx: &[f64], diffusivity: f64) -> Result<ParabolicNode> {
    if first.is_empty() || first.len() != dx.len() {
        return Err(Error::DimensionMismatch(
            "node traces and widths differ".into(),
        ));
    }
    let (num, den) = first.iter().zip(dx).fold((0.0, 0.0), |(n, d), (&m, &h)| {
        (n + 2.0 * m / h, d + 2.0 / h)
    });
    let value = num / den;
    let fluxes = first
        .iter()
        .zip(dx)
        .map(|(&m, &h)| -diffusivity * (m - value) * 2.0 / h)
        .collect();
    Ok(ParabolicNode { value, fluxes })
}

/// Flux-limited node gradients `limit((m_i - m*) / (Δx_i / 2))`.
pub fn node_gradients(first: &[f64], dx: &[f64], node_value: f64) -> Vec<f64> {
    first
        .iter()
        .zip(dx)
        .map(|(&m, &h)| limit((m - node_value) * 2.0 / h))
        .collect()
}

/// Shared density `ρ*` with zero net flux, where edge `i` carries
/// `q_i = -(1/(3λ)) (ρ_i - ρ*) / (Δx_i/2) + (α/(3λ)) m̄_i ρ*`.
pub fn solve_node_keller_segel(
    first: &[f64],
    mbar: &[f64],
    dx: &[f64],
    lambda: f64,
    alpha: f64,
    node: usize,
) -> Result<ParabolicNode> {
    if first.is_empty() || first.len() != dx.len() || mbar.len() != dx.len() {
        return Err(Error::DimensionMismatch(
            "node traces and widths differ".into(),
        ));
    }
    let c = 1.0 / (3.0 * lambda);
    let mut num = 0.0;
    let mut den = 0.0;
    for ((&rho, &g), &h) in first.iter().zip(mbar).zip(dx) {
        let cond = 2.0 / h;
        num += cond * rho;
        den += cond + alpha * g;
    }
    if !(den > 0.0) {
        return Err(Error::SingularSystem { node });
    }
    let value = num / den;
    let fluxes = first
        .iter()
        .zip(mbar)
        .zip(dx)
        .map(|((&rho, &g), &h)| -c * (rho - value) * 2.0 / h + alpha * c * g * value)
        .collect();
    Ok(ParabolicNode { value, fluxes })
}
