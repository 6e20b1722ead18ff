//! Constant-coefficient linear hyperbolic systems `U_t + M U_x = 0`:
//! eigenstructure, first-order upwinding and time step selection.

mod eigen;

pub use eigen::{characteristic_polynomial, eval_poly, real_roots};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Courant numbers up to `1 + CFL_SLACK` are accepted to absorb rounding in
/// `dt = dx / speed`.
pub(crate) const CFL_SLACK: f64 = 1e-12;

/// A diagonalizable transport matrix with real spectrum and its cached
/// characteristic decomposition.
#[derive(Clone, Debug)]
pub struct LinearHyperbolicSystem {
    matrix: DMatrix<f64>,
    eigenvalues: Vec<f64>,
    right: DMatrix<f64>,
    left: DMatrix<f64>,
    // row-major R Λ⁺ L and R Λ⁻ L
    plus: Vec<f64>,
    minus: Vec<f64>,
}

/// Decompose a transport matrix given in row-major order.
pub fn eigendecompose(n: usize, rows: &[f64]) -> Result<LinearHyperbolicSystem> {
    if rows.len() != n * n {
        return Err(Error::DimensionMismatch(format!(
            "expected {} matrix entries, got {}",
            n * n,
            rows.len()
        )));
    }
    LinearHyperbolicSystem::new(DMatrix::from_row_slice(n, n, rows))
}

impl LinearHyperbolicSystem {
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        let d = eigen::decompose(&matrix)?;
        let n = matrix.nrows();
        let split = |f: fn(f64) -> f64| {
            let lam = DMatrix::from_diagonal(&DVector::from_iterator(
                n,
                d.eigenvalues.iter().map(|&l| f(l)),
            ));
            let a = &d.right * lam * &d.left;
            (0..n * n).map(|k| a[(k / n, k % n)]).collect::<Vec<_>>()
        };
        let plus = split(|l| l.max(0.0));
        let minus = split(|l| l.min(0.0));
        Ok(LinearHyperbolicSystem {
            matrix,
            eigenvalues: d.eigenvalues,
            right: d.right,
            left: d.left,
            plus,
            minus,
        })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Right eigenvectors as columns, ordered like [`Self::eigenvalues`].
    pub fn right_eigenvectors(&self) -> &DMatrix<f64> {
        &self.right
    }

    /// Left eigenvectors as rows; `left * right = I`.
    pub fn left_eigenvectors(&self) -> &DMatrix<f64> {
        &self.left
    }

    pub fn max_speed(&self) -> f64 {
        self.eigenvalues.iter().fold(0.0, |m, l| m.max(l.abs()))
    }

    /// Indices of the characteristic families moving in +x.
    pub fn positive_families(&self) -> Vec<usize> {
        (0..self.dim())
            .filter(|&k| self.eigenvalues[k] > 0.0)
            .collect()
    }

    pub fn to_characteristic(&self, u: &[f64]) -> Vec<f64> {
        (&self.left * DVector::from_column_slice(u))
            .iter()
            .copied()
            .collect()
    }

    pub fn from_characteristic(&self, w: &[f64]) -> Vec<f64> {
        (&self.right * DVector::from_column_slice(w))
            .iter()
            .copied()
            .collect()
    }

    /// `R Λ L`, for checking the decomposition.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let lam = DMatrix::from_diagonal(&DVector::from_column_slice(&self.eigenvalues));
        &self.right * lam * &self.left
    }

    /// Row-major `A⁺` and `A⁻`.
    pub fn split_matrices(&self) -> (&[f64], &[f64]) {
        (&self.plus, &self.minus)
    }

    #[inline]
    fn face_flux(&self, left: &[f64], right: &[f64], out: &mut [f64]) {
        let n = self.dim();
        for (i, o) in out.iter_mut().enumerate() {
            let mut s = 0.0;
            for j in 0..n {
                s += self.plus[i * n + j] * left[j] + self.minus[i * n + j] * right[j];
            }
            *o = s;
        }
    }

    /// Upwind numerical flux `A⁺ U_left + A⁻ U_right` across one face.
    pub fn upwind_flux(&self, left: &[f64], right: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.face_flux(left, right, &mut out);
        out
    }
}

/// Uniform cells on an edge of given length.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EdgeGrid {
    pub cells: usize,
    pub dx: f64,
}

impl EdgeGrid {
    pub fn new(length: f64, cells: usize) -> Result<Self> {
        if !(length.is_finite() && length > 0.0) || cells == 0 {
            return Err(Error::InvalidParameter(format!(
                "grid needs positive length and cells, got L={length}, N={cells}"
            )));
        }
        Ok(EdgeGrid {
            cells,
            dx: length / cells as f64,
        })
    }

    pub fn length(&self) -> f64 {
        self.dx * self.cells as f64
    }

    pub fn center(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.dx
    }

    pub fn centers(&self) -> Vec<f64> {
        (0..self.cells).map(|i| self.center(i)).collect()
    }
}

/// One explicit upwind step in conservation form.
///
/// `state` holds `n` components per cell, cell after cell. The ghost states
/// `left` and `right` sit beyond the first and last cell; only their
/// characteristic components entering the edge influence the result.
pub fn upwind_step(
    state: &[f64],
    sys: &LinearHyperbolicSystem,
    dt: f64,
    dx: f64,
    left: &[f64],
    right: &[f64],
) -> Result<Vec<f64>> {
    let mut out = vec![0.0; state.len()];
    upwind_step_into(state, sys, dt, dx, left, right, &mut out)?;
    Ok(out)
}

/// [`upwind_step`] writing into a caller-provided buffer.
pub fn upwind_step_into(
    state: &[f64],
    sys: &LinearHyperbolicSystem,
    dt: f64,
    dx: f64,
    left: &[f64],
    right: &[f64],
    out: &mut [f64],
) -> Result<()> {
    let n = sys.dim();
    if !state.len().is_multiple_of(n)
        || left.len() != n
        || right.len() != n
        || out.len() != state.len()
    {
        return Err(Error::DimensionMismatch(format!(
            "upwind step on {n}-component system with state of length {}",
            state.len()
        )));
    }
    let courant = dt * sys.max_speed() / dx;
    if courant > 1.0 + CFL_SLACK {
        return Err(Error::CflViolation { courant });
    }
    let cells = state.len() / n;
    let ratio = dt / dx;
    let mut f_left = [0.0; 8];
    let mut f_right = [0.0; 8];
    debug_assert!(n <= 8);
    sys.face_flux(left, &state[..n], &mut f_left[..n]);
    for i in 0..cells {
        let u = &state[i * n..(i + 1) * n];
        let next = if i + 1 < cells {
            &state[(i + 1) * n..(i + 2) * n]
        } else {
            right
        };
        sys.face_flux(u, next, &mut f_right[..n]);
        for c in 0..n {
            out[i * n + c] = u[c] - ratio * (f_right[c] - f_left[c]);
        }
        f_left[..n].copy_from_slice(&f_right[..n]);
    }
    Ok(())
}

/// Largest stable global step:
/// `safety * min_edges min(dx / max|λ|, dx² / (2 max diffusivity))`.
pub fn cfl_dt(
    systems: &[&LinearHyperbolicSystem],
    grids: &[EdgeGrid],
    parabolic_coeffs: &[f64],
    safety: f64,
) -> Result<f64> {
    if grids.is_empty() {
        return Err(Error::EmptyInput("no edge grids"));
    }
    if systems.is_empty() && parabolic_coeffs.is_empty() {
        return Err(Error::EmptyInput(
            "neither transport systems nor diffusivities",
        ));
    }
    if !(safety > 0.0 && safety <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "CFL safety factor must lie in (0, 1], got {safety}"
        )));
    }
    let speed = systems.iter().fold(0.0, |m: f64, s| m.max(s.max_speed()));
    let diffusivity = parabolic_coeffs.iter().fold(0.0, |m: f64, &d| m.max(d));
    let mut dt = f64::INFINITY;
    for g in grids {
        if speed > 0.0 {
            dt = dt.min(g.dx / speed);
        }
        if diffusivity > 0.0 {
            dt = dt.min(g.dx * g.dx / (2.0 * diffusivity));
        }
    }
    if !dt.is_finite() {
        return Err(Error::EmptyInput("no positive speed or diffusivity"));
    }
    Ok(safety * dt)
}
