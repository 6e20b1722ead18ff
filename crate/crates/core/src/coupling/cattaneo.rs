use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::characteristic::CharacteristicNodeSolver;
use super::limit::{epsilon_limit_check, BlockCondition};
use super::CouplingMatrix;
use crate::error::{Error, Result};
use crate::hyperbolic::LinearHyperbolicSystem;

/// Transmission weights `α_ij`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AlphaWeights {
    /// The same weight between every pair of edges.
    Uniform(f64),
    /// Row-major `N × N` weights for nodes of degree `N`.
    Matrix(Vec<f64>),
}

impl Default for AlphaWeights {
    fn default() -> Self {
        AlphaWeights::Uniform(1.0)
    }
}

impl AlphaWeights {
    pub fn matrix(&self, n: usize) -> Result<DMatrix<f64>> {
        let m = match self {
            AlphaWeights::Uniform(a) => {
                DMatrix::from_fn(n, n, |i, j| if i == j { 0.0 } else { *a })
            }
            AlphaWeights::Matrix(v) => {
                if v.len() != n * n {
                    return Err(Error::InvalidCoupling(format!(
                        "transmission weights have {} entries, node degree is {n}",
                        v.len()
                    )));
                }
                DMatrix::from_row_slice(n, n, v)
            }
        };
        if m.iter().any(|a| !(*a >= 0.0 && a.is_finite())) {
            return Err(Error::InvalidCoupling(
                "transmission weights must be nonnegative".into(),
            ));
        }
        for j in 0..n {
            let balance: f64 = (0..n).map(|i| m[(i, j)] - m[(j, i)]).sum();
            if balance.abs() > 1e-12 * m.amax().max(1.0) {
                return Err(Error::InvalidCoupling(format!(
                    "transmission weights unbalanced at edge {j}"
                )));
            }
        }
        Ok(m)
    }
}

/// Node conditions for the Cattaneo model.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CattaneoCoupling {
    /// Moments of the kinetic conditions:
    /// `(I - A) ρ + (3ε/2) (I + A) q = 0`.
    #[default]
    KineticDerived,
    /// `q_i / (√3 ε) = Σ_j α_ij (ρ_j - ρ_i)`.
    AlphaTransmission(AlphaWeights),
    /// `ρ_i = ρ_j` and `Σ q_i = 0`.
    DensityContinuity,
}

/// The kinetic-derived Cattaneo block on components (ρ, q).
pub fn cattaneo_conditions(a: &CouplingMatrix) -> BlockCondition {
    let n = a.order();
    let id = DMatrix::<f64>::identity(n, n);
    BlockCondition {
        x: 0,
        y: 1,
        r: &id - a.matrix(),
        s: (&id + a.matrix()) * 1.5,
    }
}

pub(crate) fn condition_rows(
    variant: &CattaneoCoupling,
    a: &CouplingMatrix,
    eps: f64,
) -> Result<DMatrix<f64>> {
    let n = a.order();
    Ok(match variant {
        CattaneoCoupling::KineticDerived => {
            epsilon_limit_check(&cattaneo_conditions(a), eps)?.rows(2)
        }
        CattaneoCoupling::AlphaTransmission(w) => {
            let alpha = w.matrix(n)?;
            let c = 3f64.sqrt() * eps;
            let mut rows = DMatrix::zeros(n, 2 * n);
            for i in 0..n {
                rows[(i, 2 * i + 1)] = 1.0;
                for j in (0..n).filter(|&j| j != i) {
                    rows[(i, 2 * j)] -= c * alpha[(i, j)];
                    rows[(i, 2 * i)] += c * alpha[(i, j)];
                }
            }
            rows
        }
        CattaneoCoupling::DensityContinuity => {
            let mut rows = DMatrix::zeros(n, 2 * n);
            for i in 0..n - 1 {
                rows[(i, 2 * i)] = 1.0;
                rows[(i, 2 * (i + 1))] = -1.0;
            }
            for e in 0..n {
                rows[(n - 1, 2 * e + 1)] = 1.0;
            }
            rows
        }
    })
}

impl CharacteristicNodeSolver {
    pub fn cattaneo(
        sys: &LinearHyperbolicSystem,
        variant: &CattaneoCoupling,
        a: &CouplingMatrix,
        eps: f64,
        node: usize,
    ) -> Result<Self> {
        Self::new(sys, a.order(), condition_rows(variant, a, eps)?, node)
    }
}

/// Node states `(ρ, q)` per edge from local-frame first-cell traces.
pub fn solve_node_cattaneo(
    sys: &LinearHyperbolicSystem,
    traces: &[[f64; 2]],
    variant: &CattaneoCoupling,
    a: &CouplingMatrix,
    eps: f64,
) -> Result<Vec<[f64; 2]>> {
    let solver = CharacteristicNodeSolver::cattaneo(sys, variant, a, eps, usize::MAX)?;
    let flat: Vec<f64> = traces.iter().flatten().copied().collect();
    let out = solver.solve(&flat)?;
    Ok(out.chunks(2).map(|c| [c[0], c[1]]).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coupling::kinetic_coupling_matrix;
    use crate::models::cattaneo::transport_system;
    use nalgebra::DVector;
    use proptest::prelude::*;

    fn flat(s: &[[f64; 2]]) -> DVector<f64> {
        DVector::from_iterator(2 * s.len(), s.iter().flatten().copied())
    }

    #[test]
    fn kinetic_derived_fixed_point_and_balance() {
        let sys = transport_system(1.0 / 3.0).unwrap();
        let a = kinetic_coupling_matrix(3).unwrap();
        let out = solve_node_cattaneo(
            &sys,
            &[[2.0, 0.0]; 3],
            &CattaneoCoupling::KineticDerived,
            &a,
            0.4,
        )
        .unwrap();
        for s in &out {
            assert!((s[0] - 2.0).abs() < 1e-14 && s[1].abs() < 1e-14);
        }
        let traces = [[1.0, 0.3], [0.2, -0.1], [3.0, 0.0]];
        let out =
            solve_node_cattaneo(&sys, &traces, &CattaneoCoupling::KineticDerived, &a, 0.4).unwrap();
        let total: f64 = out.iter().map(|s| s[1]).sum();
        assert!(total.abs() < 1e-12);
        let res = cattaneo_conditions(&a).rows(0.4, 2) * flat(&out);
        assert!(res.amax() < 1e-12);
    }

    #[test]
    fn density_continuity() {
        let sys = transport_system(1.0 / 3.0).unwrap();
        let a = kinetic_coupling_matrix(4).unwrap();
        let traces = [[1.0, 0.3], [0.2, -0.1], [3.0, 0.0], [0.5, 0.5]];
        let out = solve_node_cattaneo(&sys, &traces, &CattaneoCoupling::DensityContinuity, &a, 0.1)
            .unwrap();
        for s in &out {
            assert!((s[0] - out[0][0]).abs() < 1e-12);
        }
        assert!(out.iter().map(|s| s[1]).sum::<f64>().abs() < 1e-12);
    }

    #[test]
    fn alpha_transmission_defining_equation() {
        let sys = transport_system(1.0 / 3.0).unwrap();
        let a = kinetic_coupling_matrix(3).unwrap();
        let eps = 0.7;
        let traces = [[1.0, 0.3], [0.2, -0.1], [3.0, 0.0]];
        let variant = CattaneoCoupling::AlphaTransmission(AlphaWeights::Uniform(1.0));
        let out = solve_node_cattaneo(&sys, &traces, &variant, &a, eps).unwrap();
        for i in 0..3 {
            let rhs: f64 = (0..3)
                .filter(|&j| j != i)
                .map(|j| out[j][0] - out[i][0])
                .sum();
            assert!((out[i][1] / (3f64.sqrt() * eps) - rhs).abs() < 1e-12);
        }
        assert!(out.iter().map(|s| s[1]).sum::<f64>().abs() < 1e-12);
    }

    #[test]
    fn unbalanced_weights_rejected() {
        let w = AlphaWeights::Matrix(vec![0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        assert!(w.matrix(3).is_err());
        assert!(AlphaWeights::Uniform(-1.0).matrix(3).is_err());
        assert!(AlphaWeights::Matrix(vec![0.0; 4]).matrix(3).is_err());
    }

    proptest! {
        #[test]
        fn alpha_transmission_matches_kinetic_derived(
            eps in 0.05f64..1.0,
            t in proptest::collection::vec((0.0f64..3.0, -1.0f64..1.0), 3),
        ) {
            let sys = transport_system(1.0 / 3.0).unwrap();
            let a = kinetic_coupling_matrix(3).unwrap();
            let traces: Vec<[f64; 2]> = t.iter().map(|&(r, q)| [r, q]).collect();
            let alpha = 2.0 / (3.0 * 3f64.sqrt() * eps * eps);
            let v = CattaneoCoupling::AlphaTransmission(AlphaWeights::Uniform(alpha));
            let x = solve_node_cattaneo(&sys, &traces, &v, &a, eps).unwrap();
            let y = solve_node_cattaneo(&sys, &traces, &CattaneoCoupling::KineticDerived, &a, eps).unwrap();
            for (p, q) in x.iter().zip(&y) {
                prop_assert!((p[0] - q[0]).abs() < 1e-10 && (p[1] - q[1]).abs() < 1e-10);
            }
            // each solution satisfies the other's equations
            let kd = cattaneo_conditions(&a).rows(eps, 2) * flat(&x);
            prop_assert!(kd.amax() < 1e-10);
            let at = condition_rows(&v, &a, eps).unwrap() * flat(&y);
            prop_assert!(at.amax() < 1e-10);
        }
    }
}
