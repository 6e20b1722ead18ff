//! Coupling conditions of the form `R x + ε S y = 0` and their
//! transformation by `T = [I_{N-1} 0; 1ᵀ]`.
//!
//! Column sums of `R = I - A` vanish, so the summed equation carries a
//! factor ε that can be divided out. The transformed system stays well
//! conditioned as ε → 0 and reduces to the Keller-Segel node conditions
//! at ε = 0.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// `R x + ε S y = 0`, where `x` and `y` index components of the node states.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockCondition {
    pub x: usize,
    pub y: usize,
    pub r: DMatrix<f64>,
    pub s: DMatrix<f64>,
}

/// Transformed block `R̃ x + S̃ y = 0` (ε is folded into `S̃`).
#[derive(Clone, Debug, PartialEq)]
pub struct LimitSystem {
    pub x: usize,
    pub y: usize,
    pub r: DMatrix<f64>,
    pub s: DMatrix<f64>,
}

fn place(
    out: &mut DMatrix<f64>,
    row0: usize,
    x: usize,
    y: usize,
    r: &DMatrix<f64>,
    s: &DMatrix<f64>,
    dim: usize,
) {
    let n = r.nrows();
    for i in 0..n {
        for e in 0..n {
            out[(row0 + i, e * dim + x)] += r[(i, e)];
            out[(row0 + i, e * dim + y)] += s[(i, e)];
        }
    }
}

impl BlockCondition {
    pub fn order(&self) -> usize {
        self.r.nrows()
    }

    /// Untransformed rows acting on stacked node states of size `dim`.
    pub fn rows(&self, eps: f64, dim: usize) -> DMatrix<f64> {
        let n = self.order();
        let mut out = DMatrix::zeros(n, n * dim);
        place(&mut out, 0, self.x, self.y, &self.r, &(&self.s * eps), dim);
        out
    }
}

impl LimitSystem {
    pub fn rows(&self, dim: usize) -> DMatrix<f64> {
        let n = self.r.nrows();
        let mut out = DMatrix::zeros(n, n * dim);
        place(&mut out, 0, self.x, self.y, &self.r, &self.s, dim);
        out
    }

    /// Largest `|R̃ x + S̃ y|` over a basis of {x constant, Σ y = 0}. Zero
    /// when continuity of x and the Kirchhoff law for y solve the system.
    pub fn limit_residual(&self) -> f64 {
        let n = self.r.nrows();
        let ones = DMatrix::from_element(n, 1, 1.0);
        let mut worst = (&self.r * &ones).amax();
        for i in 0..n - 1 {
            let mut y = DMatrix::zeros(n, 1);
            y[i] = 1.0;
            y[n - 1] = -1.0;
            worst = worst.max((&self.s * y).amax());
        }
        worst
    }

    /// Rank of `[R̃ S̃]`; `N` means the solution set is exactly
    /// {x constant, Σ y = 0} whenever [`Self::limit_residual`] vanishes.
    pub fn rank(&self) -> usize {
        let n = self.r.nrows();
        let mut m = DMatrix::zeros(n, 2 * n);
        m.view_mut((0, 0), (n, n)).copy_from(&self.r);
        m.view_mut((0, n), (n, n)).copy_from(&self.s);
        m.rank(1e-10)
    }
}

/// Left-multiply a block by `T` and divide the summed equation by ε.
pub fn epsilon_limit_check(block: &BlockCondition, eps: f64) -> Result<LimitSystem> {
    let n = block.order();
    if n < 2 || block.r.ncols() != n || block.s.shape() != (n, n) {
        return Err(Error::DimensionMismatch(format!(
            "condition block must be square of order >= 2, got {n}"
        )));
    }
    if !(eps >= 0.0 && eps.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "epsilon must be >= 0, got {eps}"
        )));
    }
    let r_sum = block.r.row_sum();
    let scale = block.r.amax().max(1.0);
    if r_sum.amax() > 1e-12 * scale * n as f64 {
        return Err(Error::InvalidCoupling(
            "column sums of the density block do not vanish".into(),
        ));
    }
    let mut r = block.r.clone();
    let mut s = &block.s * eps;
    r.row_mut(n - 1).fill(0.0);
    s.row_mut(n - 1).copy_from(&block.s.row_sum());
    Ok(LimitSystem {
        x: block.x,
        y: block.y,
        r,
        s,
    })
}
