//! Generic node solve: keep the outgoing characteristic components of each
//! edge trace and pick the incoming strengths so that linear coupling
//! conditions `G U = 0` hold on the stacked node states.

use nalgebra::Dyn;
use nalgebra::{DMatrix, DVector, LU};

use crate::error::{Error, Result};
use crate::hyperbolic::LinearHyperbolicSystem;

#[derive(Clone, Debug)]
pub struct CharacteristicNodeSolver {
    edges: usize,
    dim: usize,
    // row-major projection onto the outgoing families
    outgoing: Vec<f64>,
    // right eigenvectors of the incoming families, one column each
    incoming: Vec<Vec<f64>>,
    conditions: DMatrix<f64>,
    lu: LU<f64, Dyn, Dyn>,
}

impl CharacteristicNodeSolver {
    /// `conditions` has `edges * (number of positive speeds)` rows and
    /// `edges * dim` columns acting on the stacked local-frame node states.
    pub fn new(
        sys: &LinearHyperbolicSystem,
        edges: usize,
        conditions: DMatrix<f64>,
        node: usize,
    ) -> Result<Self> {
        let dim = sys.dim();
        let pos = sys.positive_families();
        let unknowns = edges * pos.len();
        if conditions.nrows() != unknowns || conditions.ncols() != edges * dim {
            return Err(Error::DimensionMismatch(format!(
                "node {node}: {} conditions on {} columns, expected {unknowns} on {}",
                conditions.nrows(),
                conditions.ncols(),
                edges * dim
            )));
        }
        let r = sys.right_eigenvectors();
        let l = sys.left_eigenvectors();
        let mut outgoing = vec![0.0; dim * dim];
        for k in (0..dim).filter(|k| !pos.contains(k)) {
            for i in 0..dim {
                for j in 0..dim {
                    outgoing[i * dim + j] += r[(i, k)] * l[(k, j)];
                }
            }
        }
        let incoming: Vec<Vec<f64>> = pos
            .iter()
            .map(|&k| r.column(k).iter().copied().collect())
            .collect();
        let npos = pos.len();
        let mut basis = DMatrix::<f64>::zeros(edges * dim, unknowns);
        for e in 0..edges {
            for (p, vec) in incoming.iter().enumerate() {
                for i in 0..dim {
                    basis[(e * dim + i, e * npos + p)] = vec[i];
                }
            }
        }
        let system = &conditions * basis;
        let scale = system.amax();
        let lu = system.lu();
        let pivots = lu.u().diagonal();
        let smallest = pivots.iter().fold(f64::INFINITY, |m, p| m.min(p.abs()));
        if !(smallest > 1e-13 * scale) {
            return Err(Error::SingularSystem { node });
        }
        Ok(CharacteristicNodeSolver {
            edges,
            dim,
            outgoing,
            incoming,
            conditions,
            lu,
        })
    }

    pub fn edges(&self) -> usize {
        self.edges
    }

    /// Node states for stacked local-frame traces (`edges * dim` values).
    pub fn solve(&self, traces: &[f64]) -> Result<Vec<f64>> {
        self.solve_affine(traces, None)
    }

    /// Like [`Self::solve`] for inhomogeneous conditions `G U = rhs`.
    pub fn solve_affine(&self, traces: &[f64], rhs_values: Option<&[f64]>) -> Result<Vec<f64>> {
        let (n, dim) = (self.edges, self.dim);
        if traces.len() != n * dim {
            return Err(Error::DimensionMismatch(format!(
                "expected {} trace values, got {}",
                n * dim,
                traces.len()
            )));
        }
        let mut states = vec![0.0; n * dim];
        for e in 0..n {
            let u = &traces[e * dim..(e + 1) * dim];
            for i in 0..dim {
                states[e * dim + i] = (0..dim).map(|j| self.outgoing[i * dim + j] * u[j]).sum();
            }
        }
        let mut rhs = -(&self.conditions * DVector::from_column_slice(&states));
        if let Some(b) = rhs_values {
            if b.len() != rhs.len() {
                return Err(Error::DimensionMismatch(format!(
                    "expected {} condition values, got {}",
                    rhs.len(),
                    b.len()
                )));
            }
            rhs += DVector::from_column_slice(b);
        }
        let c = self
            .lu
            .solve(&rhs)
            .ok_or(Error::SingularSystem { node: usize::MAX })?;
        let npos = self.incoming.len();
        for e in 0..n {
            for (p, vec) in self.incoming.iter().enumerate() {
                let amp = c[e * npos + p];
                for i in 0..dim {
                    states[e * dim + i] += amp * vec[i];
                }
            }
        }
        Ok(states)
    }

    /// Largest `|G U|` entry; zero up to rounding for solved states.
    pub fn residual(&self, states: &[f64]) -> f64 {
        (&self.conditions * DVector::from_column_slice(states)).amax()
    }
}
