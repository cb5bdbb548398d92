use ndarray::Array1;
use ndarray_linalg::Eigh;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::operators::{CMatrix, Operator, QubitState, SpaceDims, C_ONE};

pub const HERMITICITY_TOL: f64 = 1e-9;
pub const TRACE_TOL: f64 = 1e-9;
pub const POSITIVITY_TOL: f64 = -1e-8;

/// Validated density matrix: Hermitian, unit trace, positive within
/// documented tolerances.
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    dims: SpaceDims,
    matrix: CMatrix,
}

impl DensityMatrix {
    pub fn new(dims: SpaceDims, matrix: CMatrix) -> Result<Self> {
        let d = dims.total();
        if matrix.shape() != [d, d] {
            return Err(Error::DimensionMismatch(format!(
                "expected {d}x{d} density matrix, got {:?}",
                matrix.shape()
            )));
        }
        let mut herm_defect = 0.0_f64;
        for i in 0..d {
            for j in i..d {
                herm_defect = herm_defect.max((matrix[[i, j]] - matrix[[j, i]].conj()).norm());
            }
        }
        if herm_defect > HERMITICITY_TOL {
            return Err(Error::InvalidState(format!(
                "hermiticity defect {herm_defect:.3e} exceeds {HERMITICITY_TOL:.0e}"
            )));
        }
        let tr: Complex64 = matrix.diag().sum();
        if (tr - C_ONE).norm() > TRACE_TOL {
            return Err(Error::InvalidState(format!("trace {tr} is not 1")));
        }
        let min_eig = min_eigenvalue(&matrix)?;
        if min_eig < POSITIVITY_TOL {
            return Err(Error::InvalidState(format!(
                "minimum eigenvalue {min_eig:.3e} below {POSITIVITY_TOL:.0e}"
            )));
        }
        Ok(DensityMatrix { dims, matrix })
    }

    /// Pure state |g,0><g,0|: dot in the ground state, cavity empty.
    pub fn ground(dims: SpaceDims) -> Self {
        let d = dims.total();
        let mut m = CMatrix::zeros((d, d));
        let k = dims.index(QubitState::Ground, 0);
        m[[k, k]] = C_ONE;
        DensityMatrix { dims, matrix: m }
    }

    /// Pure state from a normalized ket.
    pub fn pure(dims: SpaceDims, ket: &Array1<Complex64>) -> Result<Self> {
        let d = dims.total();
        if ket.len() != d {
            return Err(Error::DimensionMismatch(format!(
                "ket length {} does not match dimension {d}",
                ket.len()
            )));
        }
        let norm2: f64 = ket.iter().map(|z| z.norm_sqr()).sum();
        if (norm2 - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidState(format!("ket norm² = {norm2} is not 1")));
        }
        let mut m = CMatrix::zeros((d, d));
        for i in 0..d {
            for j in 0..d {
                m[[i, j]] = ket[i] * ket[j].conj();
            }
        }
        Ok(DensityMatrix { dims, matrix: m })
    }

    pub fn dims(&self) -> SpaceDims {
        self.dims
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn expectation(&self, op: &Operator) -> Complex64 {
        assert_eq!(op.dims(), self.dims, "operator dims differ from state dims");
        // tr(Op ρ) without forming the full product.
        let d = self.dims.total();
        let mut s = Complex64::new(0.0, 0.0);
        for i in 0..d {
            for k in 0..d {
                s += op.matrix()[[i, k]] * self.matrix[[k, i]];
            }
        }
        s
    }

    /// Diagonal occupation of the composite basis state (q, n).
    pub fn population(&self, q: QubitState, n: usize) -> f64 {
        let k = self.dims.index(q, n);
        self.matrix[[k, k]].re
    }

    /// Total population of the highest Fock level, the truncation-error proxy.
    pub fn top_fock_population(&self) -> f64 {
        let n = self.dims.fock_dim - 1;
        self.population(QubitState::Excited, n) + self.population(QubitState::Ground, n)
    }
}

fn min_eigenvalue(m: &CMatrix) -> Result<f64> {
    let herm = m.mapv(|z| z) + crate::operators::dagger(m);
    let herm = herm.mapv(|z| z * Complex64::new(0.5, 0.0));
    let (eigs, _) = herm.eigh(ndarray_linalg::UPLO::Lower)?;
    Ok(eigs.iter().cloned().fold(f64::INFINITY, f64::min))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::make_ops;

    #[test]
    fn ground_state_is_valid_and_empty() {
        let dims = SpaceDims::new(4).unwrap();
        let rho = DensityMatrix::ground(dims);
        let ops = make_ops(dims).unwrap();
        let n = rho.expectation(&ops.a_dag.dot(&ops.a));
        assert!(n.norm() < 1e-15);
        assert!((rho.population(QubitState::Ground, 0) - 1.0).abs() < 1e-15);
        // passes its own validation
        DensityMatrix::new(dims, rho.matrix().clone()).unwrap();
    }

    #[test]
    fn rejects_non_hermitian_and_traceless() {
        let dims = SpaceDims::new(2).unwrap();
        let mut m = CMatrix::zeros((4, 4));
        m[[0, 0]] = C_ONE;
        m[[0, 1]] = Complex64::new(0.5, 0.0);
        assert!(DensityMatrix::new(dims, m).is_err());

        let m = CMatrix::zeros((4, 4));
        assert!(DensityMatrix::new(dims, m).is_err());
    }

    #[test]
    fn rejects_negative_state() {
        let dims = SpaceDims::new(2).unwrap();
        let mut m = CMatrix::zeros((4, 4));
        m[[0, 0]] = Complex64::new(1.5, 0.0);
        m[[1, 1]] = Complex64::new(-0.5, 0.0);
        assert!(DensityMatrix::new(dims, m).is_err());
    }

    #[test]
    fn top_fock_population_sums_both_qubit_branches() {
        let dims = SpaceDims::new(3).unwrap();
        let mut m = CMatrix::zeros((6, 6));
        let e2 = dims.index(QubitState::Excited, 2);
        let g2 = dims.index(QubitState::Ground, 2);
        m[[e2, e2]] = Complex64::new(0.25, 0.0);
        m[[g2, g2]] = Complex64::new(0.35, 0.0);
        m[[0, 0]] = Complex64::new(0.4, 0.0);
        let rho = DensityMatrix::new(dims, m).unwrap();
        assert!((rho.top_fock_population() - 0.6).abs() < 1e-12);
    }
}
