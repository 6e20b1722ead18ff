//! Eigendecomposition of small real-diagonalizable matrices.
//!
//! Eigenvalues are the real roots of the characteristic polynomial, isolated
//! between the critical points of the polynomial (roots of the derivative
//! interlace the roots of a real-rooted polynomial) and refined by bisection.
//! Eigenvectors span the null space of `M - λI`, read off an SVD.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Coefficients `c[0..=n]` of `det(xI - M) = Σ c[i] x^i` (Faddeev-LeVerrier).
pub fn characteristic_polynomial(m: &DMatrix<f64>) -> Vec<f64> {
    let n = m.nrows();
    let mut c = vec![0.0; n + 1];
    c[n] = 1.0;
    let mut mk = DMatrix::<f64>::zeros(n, n);
    for k in 1..=n {
        let mut next = m * &mk;
        for i in 0..n {
            next[(i, i)] += c[n - k + 1];
        }
        mk = next;
        c[n - k] = -(m * &mk).trace() / k as f64;
    }
    c
}

pub fn eval_poly(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &a| acc * x + a)
}

/// Sum of |c_i x^i|; scale for rounding error in `eval_poly`.
fn eval_magnitude(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &a| acc * x.abs() + a.abs())
}

pub fn derivative(c: &[f64]) -> Vec<f64> {
    c.iter()
        .enumerate()
        .skip(1)
        .map(|(i, &a)| a * i as f64)
        .collect()
}

fn bisect(c: &[f64], mut lo: f64, mut hi: f64) -> f64 {
    let mut flo = eval_poly(c, lo);
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = eval_poly(c, mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm < 0.0) == (flo < 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Real roots (with multiplicity, ascending). For a polynomial with complex
/// roots fewer than `degree` values come back.
pub fn real_roots(c: &[f64]) -> Vec<f64> {
    let mut c = c.to_vec();
    while c.len() > 1 && *c.last().unwrap() == 0.0 {
        c.pop();
    }
    let degree = c.len() - 1;
    match degree {
        0 => return Vec::new(),
        1 => return vec![-c[0] / c[1]],
        _ => {}
    }
    let lead = c[degree];
    let bound = 1.0
        + c[..degree]
            .iter()
            .map(|a| (a / lead).abs())
            .fold(0.0, f64::max);

    let crit = real_roots(&derivative(&c));
    let mut distinct: Vec<(f64, usize)> = Vec::new();
    for &x in &crit {
        match distinct.last_mut() {
            Some((y, k)) if (x - *y).abs() <= 1e-12 * (1.0 + y.abs()) => *k += 1,
            _ => distinct.push((x, 1)),
        }
    }

    let mut roots = Vec::with_capacity(degree);
    let is_zero =
        |x: f64| eval_poly(&c, x).abs() <= 1e-10 * eval_magnitude(&c, x).max(f64::MIN_POSITIVE);
    for &(x, k) in &distinct {
        if is_zero(x) {
            roots.extend(std::iter::repeat_n(x, k + 1));
        }
    }
    let mut points = Vec::with_capacity(distinct.len() + 2);
    points.push(-bound);
    points.extend(distinct.iter().map(|&(x, _)| x));
    points.push(bound);
    for w in points.windows(2) {
        let (a, b) = (w[0], w[1]);
        if is_zero(a) || is_zero(b) {
            continue;
        }
        let (fa, fb) = (eval_poly(&c, a), eval_poly(&c, b));
        if (fa < 0.0) != (fb < 0.0) {
            roots.push(bisect(&c, a, b));
        }
    }
    roots.sort_by(f64::total_cmp);
    roots
}

/// Eigenvalues ascending with matching right eigenvectors (columns) and the
/// left eigenvectors (rows of the inverse).
pub(crate) struct Decomposition {
    pub eigenvalues: Vec<f64>,
    pub right: DMatrix<f64>,
    pub left: DMatrix<f64>,
}

fn normalize(v: &mut [f64]) {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let first = v
        .iter()
        .copied()
        .find(|x| x.abs() > 1e-12 * norm)
        .unwrap_or(1.0);
    let scale = first.signum() / norm;
    v.iter_mut().for_each(|x| *x *= scale);
}

fn lexicographic(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(std::cmp::Ordering::Equal)
}

pub(crate) fn decompose(m: &DMatrix<f64>) -> Result<Decomposition> {
    let n = m.nrows();
    if n == 0 || m.ncols() != n {
        return Err(Error::DimensionMismatch(format!(
            "transport matrix must be square and non-empty, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let scale = m.amax().max(f64::MIN_POSITIVE);
    let roots = real_roots(&characteristic_polynomial(m));
    if roots.len() != n {
        return Err(Error::NonRealSpectrum);
    }

    let mut groups: Vec<(f64, usize)> = Vec::new();
    for &r in &roots {
        match groups.last_mut() {
            Some((x, k)) if (r - *x).abs() <= 1e-9 * scale => *k += 1,
            _ => groups.push((r, 1)),
        }
    }

    let mut eigenvalues = Vec::with_capacity(n);
    let mut vectors: Vec<Vec<f64>> = Vec::with_capacity(n);
    for &(lambda, mult) in &groups {
        let shifted = m - DMatrix::<f64>::identity(n, n) * lambda;
        let svd = shifted.svd(false, true);
        let v_t = svd.v_t.ok_or(Error::DefectiveSpectrum)?;
        let mut idx: Vec<usize> = (0..n).collect();
        idx.sort_by(|&a, &b| svd.singular_values[a].total_cmp(&svd.singular_values[b]));
        let null_dim = idx
            .iter()
            .filter(|&&i| svd.singular_values[i] <= 1e-8 * scale)
            .count();
        if null_dim < mult {
            return Err(Error::DefectiveSpectrum);
        }
        let mut basis: Vec<Vec<f64>> = idx[..mult]
            .iter()
            .map(|&i| {
                let mut v: Vec<f64> = v_t.row(i).iter().copied().collect();
                normalize(&mut v);
                v
            })
            .collect();
        basis.sort_by(|a, b| lexicographic(a, b));
        for v in basis {
            eigenvalues.push(lambda);
            vectors.push(v);
        }
    }

    let right = DMatrix::from_fn(n, n, |i, j| vectors[j][i]);
    let left = right
        .clone()
        .try_inverse()
        .ok_or(Error::DefectiveSpectrum)?;
    let identity_err = (&right * &left - DMatrix::<f64>::identity(n, n)).amax();
    let lam = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(eigenvalues.clone()));
    let recon_err = (&right * lam * &left - m).amax();
    if identity_err > 1e-12 || recon_err > 1e-12 * scale.max(1.0) {
        return Err(Error::DefectiveSpectrum);
    }
    Ok(Decomposition {
        eigenvalues,
        right,
        left,
    })
}
