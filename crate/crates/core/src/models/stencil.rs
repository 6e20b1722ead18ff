//! Cell-centred difference stencils with optional neighbours across the
//! edge ends.

/// A value sitting beyond an edge end, `distance` away from the end cell
/// centre.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Neighbor {
    pub value: f64,
    pub distance: f64,
}

/// Neighbours beyond the first (`left`) and last (`right`) cell. Missing
/// neighbours fall back to one-sided differences.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Halo {
    pub left: Option<Neighbor>,
    pub right: Option<Neighbor>,
}

impl Halo {
    pub const NONE: Halo = Halo {
        left: None,
        right: None,
    };
}

/// Central differences inside, one-sided (or neighbour-based) at the ends.
pub fn gradient_into(u: &[f64], dx: f64, halo: Halo, out: &mut [f64]) {
    let n = u.len();
    debug_assert_eq!(out.len(), n);
    if n == 0 {
        return;
    }
    if n == 1 {
        out[0] = match (halo.left, halo.right) {
            (Some(l), Some(r)) => (r.value - l.value) / (l.distance + r.distance),
            (Some(l), None) => (u[0] - l.value) / l.distance,
            (None, Some(r)) => (r.value - u[0]) / r.distance,
            (None, None) => 0.0,
        };
        return;
    }
    let inv = 0.5 / dx;
    for i in 1..n - 1 {
        out[i] = (u[i + 1] - u[i - 1]) * inv;
    }
    out[0] = match halo.left {
        Some(l) => (u[1] - l.value) / (dx + l.distance),
        None => (u[1] - u[0]) / dx,
    };
    out[n - 1] = match halo.right {
        Some(r) => (r.value - u[n - 2]) / (dx + r.distance),
        None => (u[n - 1] - u[n - 2]) / dx,
    };
}

pub fn gradient(u: &[f64], dx: f64, halo: Halo) -> Vec<f64> {
    let mut out = vec![0.0; u.len()];
    gradient_into(u, dx, halo, &mut out);
    out
}

/// `g / sqrt(1 + g²)`, bounded by one in magnitude.
#[inline]
pub fn limit(g: f64) -> f64 {
    g / 1f64.hypot(g)
}

/// Flux-limited chemoattractant gradient `m̄ = ∂x m / sqrt(1 + (∂x m)²)`.
pub fn flux_limited_gradient(m: &[f64], dx: f64) -> Vec<f64> {
    flux_limited_gradient_with(m, dx, Halo::NONE)
}

pub fn flux_limited_gradient_with(m: &[f64], dx: f64, halo: Halo) -> Vec<f64> {
    let mut g = gradient(m, dx, halo);
    g.iter_mut().for_each(|x| *x = limit(*x));
    g
}
