//! Operators on the composite two-level ⊗ Fock space.
//!
//! Basis ordering is fixed once here: the qubit factor comes first, so the
//! composite index is k = q*N + n with q = 0 the excited state, q = 1 the
//! ground state, and n the photon number (N = Fock truncation). All entries
//! that feed the Hamiltonian or Liouvillian are ordinary frequencies in GHz
//! (the X/2π convention); factors of 2π enter only where a generator
//! multiplies time.

use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = Array2<Complex64>;

pub const C_ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const C_ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Dimensions of the composite space. The qubit factor is always 2.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SpaceDims {
    pub qubit_dim: usize,
    pub fock_dim: usize,
}

impl SpaceDims {
    pub fn new(fock_dim: usize) -> Result<Self> {
        if fock_dim < 2 {
            return Err(Error::InvalidDims(format!(
                "fock_dim must be >= 2, got {fock_dim}"
            )));
        }
        Ok(SpaceDims { qubit_dim: 2, fock_dim })
    }

    /// Total Hilbert-space dimension D = 2*N.
    pub fn total(&self) -> usize {
        self.qubit_dim * self.fock_dim
    }

    /// Composite basis index for qubit state `q` (0 = excited, 1 = ground)
    /// and photon number `n`.
    pub fn index(&self, q: QubitState, n: usize) -> usize {
        assert!(n < self.fock_dim, "photon number {n} outside truncation");
        q as usize * self.fock_dim + n
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QubitState {
    Excited = 0,
    Ground = 1,
}

/// Dense operator on the composite space, tagged with its dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    dims: SpaceDims,
    matrix: CMatrix,
}

impl Operator {
    pub fn new(dims: SpaceDims, matrix: CMatrix) -> Result<Self> {
        let d = dims.total();
        if matrix.shape() != [d, d] {
            return Err(Error::DimensionMismatch(format!(
                "expected {d}x{d} matrix, got {:?}",
                matrix.shape()
            )));
        }
        Ok(Operator { dims, matrix })
    }

    pub fn zeros(dims: SpaceDims) -> Self {
        let d = dims.total();
        Operator { dims, matrix: CMatrix::zeros((d, d)) }
    }

    pub fn identity(dims: SpaceDims) -> Self {
        let d = dims.total();
        Operator { dims, matrix: CMatrix::eye(d) }
    }

    pub fn dims(&self) -> SpaceDims {
        self.dims
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    /// Conjugate transpose.
    pub fn dagger(&self) -> Operator {
        Operator { dims: self.dims, matrix: dagger(&self.matrix) }
    }

    pub fn dot(&self, other: &Operator) -> Operator {
        assert_eq!(self.dims, other.dims, "operator dims differ");
        Operator { dims: self.dims, matrix: self.matrix.dot(&other.matrix) }
    }

    pub fn scale(&self, c: Complex64) -> Operator {
        Operator { dims: self.dims, matrix: self.matrix.mapv(|z| z * c) }
    }

    pub fn add(&self, other: &Operator) -> Operator {
        assert_eq!(self.dims, other.dims, "operator dims differ");
        Operator { dims: self.dims, matrix: &self.matrix + &other.matrix }
    }

    pub fn sub(&self, other: &Operator) -> Operator {
        assert_eq!(self.dims, other.dims, "operator dims differ");
        Operator { dims: self.dims, matrix: &self.matrix - &other.matrix }
    }

    pub fn trace(&self) -> Complex64 {
        self.matrix.diag().sum()
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        let d = self.dims.total();
        for i in 0..d {
            for j in i..d {
                if (self.matrix[[i, j]] - self.matrix[[j, i]].conj()).norm() > tol {
                    return false;
                }
            }
        }
        true
    }
}

/// Conjugate transpose of a raw matrix.
pub fn dagger(m: &CMatrix) -> CMatrix {
    m.t().mapv(|z| z.conj())
}

/// Kronecker product with the fixed qubit-first ordering.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    ndarray::linalg::kron(a, b)
}

/// Annihilation operator on the bare Fock factor: <n-1|a|n> = sqrt(n).
pub fn fock_annihilator(fock_dim: usize) -> CMatrix {
    let mut a = CMatrix::zeros((fock_dim, fock_dim));
    for n in 1..fock_dim {
        a[[n - 1, n]] = Complex64::new((n as f64).sqrt(), 0.0);
    }
    a
}

/// Qubit lowering operator |g><e| on the bare two-level factor.
pub fn qubit_lowering() -> CMatrix {
    let mut s = CMatrix::zeros((2, 2));
    s[[1, 0]] = C_ONE;
    s
}

/// sigma_z = |e><e| - |g><g| on the bare two-level factor.
pub fn qubit_sigma_z() -> CMatrix {
    let mut s = CMatrix::zeros((2, 2));
    s[[0, 0]] = C_ONE;
    s[[1, 1]] = -C_ONE;
    s
}

/// The standard operator set on the composite space.
#[derive(Debug, Clone)]
pub struct Ops {
    pub a: Operator,
    pub a_dag: Operator,
    pub sigma_m: Operator,
    pub sigma_p: Operator,
    pub sigma_z: Operator,
    pub identity: Operator,
}

pub fn make_ops(dims: SpaceDims) -> Result<Ops> {
    if dims.qubit_dim != 2 || dims.fock_dim < 2 {
        return Err(Error::InvalidDims(format!("{dims:?}")));
    }
    let id2 = CMatrix::eye(2);
    let id_n = CMatrix::eye(dims.fock_dim);
    let a = Operator::new(dims, kron(&id2, &fock_annihilator(dims.fock_dim)))?;
    let a_dag = a.dagger();
    let sigma_m = Operator::new(dims, kron(&qubit_lowering(), &id_n))?;
    let sigma_p = sigma_m.dagger();
    let sigma_z = Operator::new(dims, kron(&qubit_sigma_z(), &id_n))?;
    let identity = Operator::identity(dims);
    Ok(Ops { a, a_dag, sigma_m, sigma_p, sigma_z, identity })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn rejects_fock_dim_below_two() {
        assert!(SpaceDims::new(0).is_err());
        assert!(SpaceDims::new(1).is_err());
        assert!(SpaceDims::new(2).is_ok());
    }

    #[test]
    fn annihilator_matrix_elements() {
        let a = fock_annihilator(5);
        for m in 0..5 {
            for n in 0..5 {
                let expected = if n >= 1 && m == n - 1 { (n as f64).sqrt() } else { 0.0 };
                assert!((a[[m, n]] - c(expected)).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn composite_lowering_element_is_one() {
        // <g,0| a |g,1> = 1 at N=2.
        let dims = SpaceDims::new(2).unwrap();
        let ops = make_ops(dims).unwrap();
        let row = dims.index(QubitState::Ground, 0);
        let col = dims.index(QubitState::Ground, 1);
        assert!((ops.a.matrix()[[row, col]] - C_ONE).norm() < 1e-15);
    }

    #[test]
    fn number_operator_spectrum_at_n3() {
        // a†a is diagonal with eigenvalues {0,1,2}, each twice (spin degeneracy).
        let dims = SpaceDims::new(3).unwrap();
        let ops = make_ops(dims).unwrap();
        let num = ops.a_dag.dot(&ops.a);
        let mut diag: Vec<f64> = num.matrix().diag().iter().map(|z| z.re).collect();
        for (i, z) in num.matrix().indexed_iter() {
            if i.0 != i.1 {
                assert!(z.norm() < 1e-15);
            }
        }
        diag.sort_by(|x, y| x.partial_cmp(y).unwrap());
        for (d, want) in diag.iter().zip([0.0, 0.0, 1.0, 1.0, 2.0, 2.0]) {
            assert!((d - want).abs() < 1e-14, "{d} vs {want}");
        }
    }

    #[test]
    fn truncated_commutator_at_n5() {
        // [a, a†] = I - 5 |4><4| on the Fock factor under an N=5 truncation.
        let a = fock_annihilator(5);
        let ad = dagger(&a);
        let comm = a.dot(&ad) - ad.dot(&a);
        for m in 0..5 {
            for n in 0..5 {
                let expected = match (m, n) {
                    (4, 4) => -4.0,
                    (i, j) if i == j => 1.0,
                    _ => 0.0,
                };
                assert!(
                    (comm[[m, n]] - c(expected)).norm() < 1e-14,
                    "[a,a†] wrong at ({m},{n}): {}",
                    comm[[m, n]]
                );
            }
        }
    }

    #[test]
    fn sigma_z_ordering_at_n2() {
        let dims = SpaceDims::new(2).unwrap();
        let ops = make_ops(dims).unwrap();
        let diag: Vec<f64> = ops.sigma_z.matrix().diag().iter().map(|z| z.re).collect();
        assert_eq!(diag, vec![1.0, 1.0, -1.0, -1.0]);
    }

    #[test]
    fn qubit_algebra() {
        let sm = qubit_lowering();
        let sp = dagger(&sm);
        let anti = sp.dot(&sm) + sm.dot(&sp);
        let sz = sp.dot(&sm) - sm.dot(&sp);
        assert!((&anti - &CMatrix::eye(2)).iter().all(|z| z.norm() < 1e-15));
        assert!((&sz - &qubit_sigma_z()).iter().all(|z| z.norm() < 1e-15));
    }

    #[test]
    fn kron_identity_composition() {
        let i2 = CMatrix::eye(2);
        let i3 = CMatrix::eye(3);
        let i6 = kron(&i2, &i3);
        assert!((&i6 - &CMatrix::eye(6)).iter().all(|z| z.norm() < 1e-15));
    }

    #[test]
    fn sigma_m_tensor_adag_maps_e0_to_g1() {
        // (σ₋ ⊗ a†) |e,0> = |g,1> at N=2.
        let dims = SpaceDims::new(2).unwrap();
        let op = kron(&qubit_lowering(), &dagger(&fock_annihilator(2)));
        let mut e0 = ndarray::Array1::<Complex64>::zeros(4);
        e0[dims.index(QubitState::Excited, 0)] = C_ONE;
        let out = op.dot(&e0);
        let mut g1 = ndarray::Array1::<Complex64>::zeros(4);
        g1[dims.index(QubitState::Ground, 1)] = C_ONE;
        assert!(out.iter().zip(g1.iter()).all(|(x, y)| (x - y).norm() < 1e-15));
    }

    #[test]
    fn sigma_p_sigma_m_is_excited_projector() {
        let dims = SpaceDims::new(3).unwrap();
        let ops = make_ops(dims).unwrap();
        let proj = ops.sigma_p.dot(&ops.sigma_m);
        let expected = kron(
            &{
                let mut p = CMatrix::zeros((2, 2));
                p[[0, 0]] = C_ONE;
                p
            },
            &CMatrix::eye(3),
        );
        assert!((proj.matrix() - &expected).iter().all(|z| z.norm() < 1e-15));
    }

    #[test]
    fn dagger_is_involution() {
        let dims = SpaceDims::new(3).unwrap();
        let ops = make_ops(dims).unwrap();
        let x = ops.a.add(&ops.sigma_p.scale(Complex64::new(0.3, -1.2)));
        let back = x.dagger().dagger();
        assert!((back.matrix() - x.matrix()).iter().all(|z| z.norm() < 1e-15));
    }
}
