//! Kinetic model in even/odd parity form on a midpoint velocity grid.

use rayon::prelude::*;

use super::stencil::{gradient_into, Halo};
use super::ModelParams;
use crate::error::{Error, Result};
use crate::hyperbolic::{eigendecompose, LinearHyperbolicSystem, CFL_SLACK};

/// Parity of (r, j) under x → -x.
pub const PARITY: [f64; 2] = [1.0, -1.0];

/// Midpoint grid `v_k = (k + 1/2) / N_v` on (0, 1).
#[derive(Clone, Debug, PartialEq)]
pub struct VelocityGrid {
    velocities: Vec<f64>,
}

impl VelocityGrid {
    pub fn new(count: usize) -> Result<Self> {
        if count == 0 {
            return Err(Error::InvalidParameter(
                "velocity grid needs at least one cell".into(),
            ));
        }
        let dv = 1.0 / count as f64;
        Ok(VelocityGrid {
            velocities: (0..count).map(|k| (k as f64 + 0.5) * dv).collect(),
        })
    }

    pub fn count(&self) -> usize {
        self.velocities.len()
    }

    pub fn dv(&self) -> f64 {
        1.0 / self.count() as f64
    }

    pub fn velocities(&self) -> &[f64] {
        &self.velocities
    }

    pub fn max_velocity(&self) -> f64 {
        *self.velocities.last().unwrap()
    }
}

/// `r[k][i]`, `j[k][i]` stored velocity-major.
#[derive(Clone, Debug, PartialEq)]
pub struct KineticEdgeState {
    pub r: Vec<f64>,
    pub j: Vec<f64>,
    nv: usize,
    nx: usize,
}

impl KineticEdgeState {
    pub fn zeros(nv: usize, nx: usize) -> Self {
        KineticEdgeState {
            r: vec![0.0; nv * nx],
            j: vec![0.0; nv * nx],
            nv,
            nx,
        }
    }

    pub fn from_parts(nv: usize, nx: usize, r: Vec<f64>, j: Vec<f64>) -> Result<Self> {
        if r.len() != nv * nx || j.len() != nv * nx {
            return Err(Error::DimensionMismatch(format!(
                "kinetic state expects {nv}x{nx} entries"
            )));
        }
        Ok(KineticEdgeState { r, j, nv, nx })
    }

    pub fn velocity_count(&self) -> usize {
        self.nv
    }

    pub fn cells(&self) -> usize {
        self.nx
    }

    pub fn r_row(&self, k: usize) -> &[f64] {
        &self.r[k * self.nx..(k + 1) * self.nx]
    }

    pub fn j_row(&self, k: usize) -> &[f64] {
        &self.j[k * self.nx..(k + 1) * self.nx]
    }

    pub fn r_row_mut(&mut self, k: usize) -> &mut [f64] {
        &mut self.r[k * self.nx..(k + 1) * self.nx]
    }

    pub fn j_row_mut(&mut self, k: usize) -> &mut [f64] {
        &mut self.j[k * self.nx..(k + 1) * self.nx]
    }

    /// `(r, j)` of velocity `k` in cell `i`.
    pub fn pair(&self, k: usize, i: usize) -> [f64; 2] {
        [self.r[k * self.nx + i], self.j[k * self.nx + i]]
    }

    /// Smallest of `r ± ε j` over all cells and velocities.
    pub fn min_distribution(&self, eps: f64) -> f64 {
        self.r.iter().zip(&self.j).fold(f64::INFINITY, |m, (r, j)| {
            m.min(r + eps * j).min(r - eps * j)
        })
    }
}

/// `(r, j) = ((f⁺ + f⁻)/2, (f⁺ - f⁻)/(2ε))`.
pub fn even_odd(f_plus: f64, f_minus: f64, eps: f64) -> (f64, f64) {
    (0.5 * (f_plus + f_minus), (f_plus - f_minus) / (2.0 * eps))
}

/// `(f⁺, f⁻) = (r + εj, r - εj)`.
pub fn from_even_odd(r: f64, j: f64, eps: f64) -> (f64, f64) {
    (r + eps * j, r - eps * j)
}

fn density_into(state: &KineticEdgeState, dv: f64, rho: &mut [f64]) {
    rho.iter_mut().for_each(|x| *x = 0.0);
    for k in 0..state.nv {
        for (p, r) in rho.iter_mut().zip(state.r_row(k)) {
            *p += r;
        }
    }
    rho.iter_mut().for_each(|x| *x *= 2.0 * dv);
}

/// `ρ_i = 2Δv Σ_k r_ki`, `q_i = 2Δv Σ_k v_k j_ki`.
pub fn moments_kinetic(state: &KineticEdgeState, vgrid: &VelocityGrid) -> (Vec<f64>, Vec<f64>) {
    let nx = state.nx;
    let dv = vgrid.dv();
    let mut rho = vec![0.0; nx];
    density_into(state, dv, &mut rho);
    let mut q = vec![0.0; nx];
    for (k, &v) in vgrid.velocities().iter().enumerate() {
        for (qi, j) in q.iter_mut().zip(state.j_row(k)) {
            *qi += v * j;
        }
    }
    q.iter_mut().for_each(|x| *x *= 2.0 * dv);
    (rho, q)
}

pub fn transport_matrix(v: f64, phi: f64) -> [f64; 4] {
    [0.0, v, phi * v, 0.0]
}

/// The per-velocity transport systems `[[0, v_k], [φ v_k, 0]]`.
#[derive(Clone, Debug)]
pub struct KineticTransport {
    systems: Vec<LinearHyperbolicSystem>,
}

impl KineticTransport {
    pub fn new(vgrid: &VelocityGrid, phi: f64) -> Result<Self> {
        let systems = vgrid
            .velocities()
            .iter()
            .map(|&v| eigendecompose(2, &transport_matrix(v, phi)))
            .collect::<Result<Vec<_>>>()?;
        Ok(KineticTransport { systems })
    }

    pub fn system(&self, k: usize) -> &LinearHyperbolicSystem {
        &self.systems[k]
    }

    pub fn max_speed(&self) -> f64 {
        self.systems.iter().fold(0.0, |m, s| m.max(s.max_speed()))
    }

    /// The fastest system, for time step selection.
    pub fn fastest(&self) -> &LinearHyperbolicSystem {
        self.systems.last().unwrap()
    }
}

/// Upwind transport of every velocity pair. `left[k]`/`right[k]` are the
/// ghost `(r, j)` beyond the first and last cell.
pub fn kinetic_transport(
    state: &mut KineticEdgeState,
    transport: &KineticTransport,
    dt: f64,
    dx: f64,
    left: &[[f64; 2]],
    right: &[[f64; 2]],
) -> Result<()> {
    let nx = state.nx;
    if transport.systems.len() != state.nv || left.len() != state.nv || right.len() != state.nv {
        return Err(Error::DimensionMismatch(
            "velocity count differs between state, systems and traces".into(),
        ));
    }
    let courant = dt * transport.max_speed() / dx;
    if courant > 1.0 + CFL_SLACK {
        return Err(Error::CflViolation { courant });
    }
    if nx == 0 {
        return Ok(());
    }
    let ratio = dt / dx;
    state
        .r
        .par_chunks_mut(nx)
        .zip(state.j.par_chunks_mut(nx))
        .enumerate()
        .for_each_init(
            || vec![[0.0; 2]; nx + 1],
            |faces, (k, (r, j))| {
                let (p, m) = transport.systems[k].split_matrices();
                let (p, m) = ([p[0], p[1], p[2], p[3]], [m[0], m[1], m[2], m[3]]);
                let flux = |l: [f64; 2], u: [f64; 2]| {
                    [
                        p[0] * l[0] + m[0] * u[0] + (p[1] * l[1] + m[1] * u[1]),
                        p[2] * l[0] + m[2] * u[0] + (p[3] * l[1] + m[3] * u[1]),
                    ]
                };
                faces[0] = flux(left[k], [r[0], j[0]]);
                faces[nx] = flux([r[nx - 1], j[nx - 1]], right[k]);
                for ((f, rw), jw) in faces[1..nx].iter_mut().zip(r.windows(2)).zip(j.windows(2)) {
                    *f = flux([rw[0], jw[0]], [rw[1], jw[1]]);
                }
                for (((ri, ji), fl), fr) in r
                    .iter_mut()
                    .zip(j.iter_mut())
                    .zip(faces.iter())
                    .zip(&faces[1..])
                {
                    *ri -= ratio * (fr[0] - fl[0]);
                    *ji -= ratio * (fr[1] - fl[1]);
                }
            },
        );
    Ok(())
}

/// `ρ_i = 2Δv Σ_k r_ki`.
pub fn density(state: &KineticEdgeState, vgrid: &VelocityGrid) -> Vec<f64> {
    let mut rho = vec![0.0; state.nx];
    density_into(state, vgrid.dv(), &mut rho);
    rho
}

/// First relaxation phase: `r ← ρ/2 + (r - ρ/2) / (1 + Δtλ/ε²)`.
/// Returns the (unchanged) cell densities.
pub fn relax_even(
    state: &mut KineticEdgeState,
    params: &ModelParams,
    vgrid: &VelocityGrid,
    dt: f64,
) -> Vec<f64> {
    let nx = state.nx;
    let mut rho = vec![0.0; nx];
    density_into(state, vgrid.dv(), &mut rho);
    let damp = 1.0 / (1.0 + params.lambda * params.stiff(dt));
    state.r.par_chunks_mut(nx).for_each(|row| {
        for (r, &p) in row.iter_mut().zip(&rho) {
            let eq = 0.5 * p;
            *r = eq + (*r - eq) * damp;
        }
    });
    rho
}

/// Second relaxation phase on the odd parity, using the relaxed `r`.
/// `halos[k]` supplies neighbours of `r_k` across the edge ends.
#[allow(clippy::too_many_arguments)]
pub fn relax_odd(
    state: &mut KineticEdgeState,
    rho: &[f64],
    mbar: &[f64],
    params: &ModelParams,
    vgrid: &VelocityGrid,
    dt: f64,
    dx: f64,
    halos: &[Halo],
) {
    let nx = state.nx;
    let a = params.stiff(dt);
    let inv = 1.0 / (1.0 + params.lambda * a);
    let diff = 1.0 - params.epsilon * params.epsilon * params.phi;
    let half_alpha = 0.5 * params.alpha;
    // the drift part of the source does not depend on the velocity
    let drift: Vec<f64> = mbar
        .iter()
        .zip(rho)
        .map(|(m, p)| half_alpha * m * p)
        .collect();
    let r = &state.r;
    state
        .j
        .par_chunks_mut(nx)
        .zip(r.par_chunks(nx))
        .enumerate()
        .for_each_init(
            || vec![0.0; nx],
            |dr, (k, (jrow, rrow))| {
                let av = a * vgrid.velocities()[k];
                let halo = halos.get(k).copied().unwrap_or_default();
                gradient_into(rrow, dx, halo, dr);
                for ((j, &d), &g) in jrow.iter_mut().zip(drift.iter()).zip(dr.iter()) {
                    *j = (*j + av * (d - diff * g)) * inv;
                }
            },
        );
}

/// Both relaxation phases without neighbours across the edge ends.
pub fn kinetic_relax(
    state: &mut KineticEdgeState,
    mbar: &[f64],
    params: &ModelParams,
    vgrid: &VelocityGrid,
    dt: f64,
    dx: f64,
) {
    let rho = relax_even(state, params, vgrid, dt);
    relax_odd(state, &rho, mbar, params, vgrid, dt, dx, &[]);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{ModelKind, PhysicalParams};
    use proptest::prelude::*;

    fn params(eps: f64) -> ModelParams {
        ModelParams::new(ModelKind::Kinetic, PhysicalParams::default(), eps, None).unwrap()
    }

    #[test]
    fn velocity_grid_quadrature() {
        let vg = VelocityGrid::new(7).unwrap();
        let total: f64 = vg.velocities().iter().map(|_| 2.0 * vg.dv()).sum();
        assert!((total - 2.0).abs() < 1e-15);
        // ∫_{-1}^{1} |v| dv = 1, exact for the midpoint rule
        let first: f64 = vg.velocities().iter().map(|v| 2.0 * vg.dv() * v).sum();
        assert!((first - 1.0).abs() < 1e-15);
        assert!(VelocityGrid::new(0).is_err());
    }

    #[test]
    fn even_odd_examples() {
        assert_eq!(even_odd(0.3, 0.3, 0.1), (0.3, 0.0));
        assert_eq!(even_odd(1.0, 0.0, 1.0), (0.5, 0.5));
    }

    proptest! {
        #[test]
        fn even_odd_round_trip(fp in -10.0f64..10.0, fm in -10.0f64..10.0, eps in 1e-3f64..1.0) {
            let (r, j) = even_odd(fp, fm, eps);
            let (a, b) = from_even_odd(r, j, eps);
            prop_assert!((a - fp).abs() <= 1e-12 * (1.0 + fp.abs()));
            prop_assert!((b - fm).abs() <= 1e-12 * (1.0 + fm.abs()));
        }
    }

    #[test]
    fn moments_examples() {
        let vg = VelocityGrid::new(2).unwrap();
        let mut s = KineticEdgeState::zeros(2, 1);
        s.r.iter_mut().for_each(|r| *r = 0.5);
        let (rho, q) = moments_kinetic(&s, &vg);
        assert!((rho[0] - 1.0).abs() < 1e-15 && q[0] == 0.0);

        let mut s = KineticEdgeState::zeros(2, 1);
        s.j[0] = 0.25;
        s.j[1] = 0.75;
        let (rho, q) = moments_kinetic(&s, &vg);
        assert_eq!(rho[0], 0.0);
        assert!((q[0] - 0.625).abs() < 1e-15);

        s.r.iter_mut().for_each(|r| *r = 0.2);
        let (rho1, q1) = moments_kinetic(&s, &vg);
        s.r.iter_mut().for_each(|r| *r *= 3.0);
        s.j.iter_mut().for_each(|j| *j *= 3.0);
        let (rho3, q3) = moments_kinetic(&s, &vg);
        assert!((rho3[0] - 3.0 * rho1[0]).abs() < 1e-15);
        assert!((q3[0] - 3.0 * q1[0]).abs() < 1e-15);
    }

    #[test]
    fn transport_keeps_constant_state() {
        let vg = VelocityGrid::new(5).unwrap();
        let tr = KineticTransport::new(&vg, 1.0).unwrap();
        let mut s = KineticEdgeState::zeros(5, 8);
        s.r.iter_mut().for_each(|r| *r = 0.5);
        let ghost = vec![[0.5, 0.0]; 5];
        kinetic_transport(&mut s, &tr, 0.01, 0.02, &ghost, &ghost).unwrap();
        assert!(s.r.iter().all(|&r| (r - 0.5).abs() < 1e-15));
        assert!(s.j.iter().all(|&j| j.abs() < 1e-15));
    }

    #[test]
    fn slow_velocities_move_less() {
        let vg = VelocityGrid::new(4).unwrap();
        let tr = KineticTransport::new(&vg, 1.0).unwrap();
        let nx = 40;
        let mut s = KineticEdgeState::zeros(4, nx);
        for k in 0..4 {
            // right-moving characteristic j + r, a bump in cell 5
            s.r_row_mut(k)[5] = 0.5;
            s.j_row_mut(k)[5] = 0.5;
        }
        let zero = vec![[0.0, 0.0]; 4];
        let dx = 0.025;
        let dt = 0.9 * dx / tr.max_speed();
        for _ in 0..20 {
            kinetic_transport(&mut s, &tr, dt, dx, &zero, &zero).unwrap();
        }
        let centroid = |k: usize| {
            let row = s.r_row(k);
            let m: f64 = row.iter().sum();
            row.iter()
                .enumerate()
                .map(|(i, r)| i as f64 * r)
                .sum::<f64>()
                / m
        };
        let shifts: Vec<f64> = (0..4).map(|k| centroid(k) - 5.0).collect();
        for w in shifts.windows(2) {
            assert!(w[0] < w[1]);
        }
        let ratio = shifts[3] / shifts[0];
        assert!((ratio - 7.0).abs() < 1e-9, "{ratio}");
    }

    #[test]
    fn transport_conserves_mass_up_to_boundary_flux() {
        let vg = VelocityGrid::new(6).unwrap();
        let tr = KineticTransport::new(&vg, 1.0).unwrap();
        let nx = 30;
        let mut s = KineticEdgeState::zeros(6, nx);
        for (idx, r) in s.r.iter_mut().enumerate() {
            *r = 0.5 + 0.3 * ((idx % nx) as f64 * 0.4).sin();
        }
        for (idx, j) in s.j.iter_mut().enumerate() {
            *j = 0.1 * ((idx % nx) as f64 * 0.7).cos();
        }
        let left = vec![[0.2, 0.1]; 6];
        let right = vec![[0.7, -0.3]; 6];
        let dx = 1.0 / nx as f64;
        let dt = 0.8 * dx / tr.max_speed();
        let before = moments_kinetic(&s, &vg).0.iter().sum::<f64>() * dx;
        // expected boundary mass flux 2Δv Σ_k (first component of the face flux)
        let mut flux = 0.0;
        for k in 0..6 {
            let sys = tr.system(k);
            let fl = sys.upwind_flux(&left[k], &s.pair(k, 0));
            let fr = sys.upwind_flux(&s.pair(k, nx - 1), &right[k]);
            flux += 2.0 * vg.dv() * (fl[0] - fr[0]);
        }
        kinetic_transport(&mut s, &tr, dt, dx, &left, &right).unwrap();
        let after = moments_kinetic(&s, &vg).0.iter().sum::<f64>() * dx;
        assert!((after - before - dt * flux).abs() < 1e-14);
    }

    #[test]
    fn relaxation_examples() {
        // two velocities with r = (1, 0) carry ρ = 1
        let vg = VelocityGrid::new(2).unwrap();
        let p = params(1.0);
        let mut s =
            KineticEdgeState::from_parts(2, 3, vec![1.0, 1.0, 1.0, 0.0, 0.0, 0.0], vec![0.0; 6])
                .unwrap();
        let rho = relax_even(&mut s, &p, &vg, 1.0);
        assert_eq!(rho, vec![1.0; 3]);
        assert_eq!(s.r_row(0), &[0.75; 3]);
        assert_eq!(s.r_row(1), &[0.25; 3]);

        // cell mass before/after and fixed point of j
        let vg = VelocityGrid::new(4).unwrap();
        let mut s = KineticEdgeState::zeros(4, 5);
        for (i, r) in s.r.iter_mut().enumerate() {
            *r = 0.1 + 0.05 * i as f64;
        }
        let before = moments_kinetic(&s, &vg).0;
        let mbar = [0.3; 5];
        kinetic_relax(&mut s, &mbar, &p, &vg, 0.01, 0.1);
        let after = moments_kinetic(&s, &vg).0;
        for (a, b) in after.iter().zip(&before) {
            assert!((a - b).abs() <= 1e-15 * b.abs().max(1.0));
        }
    }

    #[test]
    fn equilibrium_is_fixed_point() {
        let vg = VelocityGrid::new(3).unwrap();
        let p = params(0.5);
        let nx = 6;
        let dx = 0.1;
        let rho: Vec<f64> = (0..nx).map(|i| 1.0 + 0.2 * i as f64).collect();
        let mbar: Vec<f64> = (0..nx).map(|i| 0.1 * i as f64 - 0.2).collect();
        let mut s = KineticEdgeState::zeros(3, nx);
        for k in 0..3 {
            s.r_row_mut(k)
                .copy_from_slice(&rho.iter().map(|p| 0.5 * p).collect::<Vec<_>>());
        }
        let half: Vec<f64> = rho.iter().map(|p| 0.5 * p).collect();
        let dr = crate::models::stencil::gradient(&half, dx, Halo::NONE);
        for (k, &v) in vg.velocities().iter().enumerate() {
            for i in 0..nx {
                let src = 0.5 * p.alpha * v * mbar[i] * rho[i]
                    - (1.0 - p.epsilon * p.epsilon * p.phi) * v * dr[i];
                s.j_row_mut(k)[i] = src / p.lambda;
            }
        }
        let before = s.clone();
        kinetic_relax(&mut s, &mbar, &p, &vg, 0.37, dx);
        for (a, b) in s.r.iter().zip(&before.r) {
            assert!((a - b).abs() < 1e-15);
        }
        for (a, b) in s.j.iter().zip(&before.j) {
            assert!((a - b).abs() < 1e-14);
        }
    }
}
