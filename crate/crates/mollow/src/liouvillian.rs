//! Hamiltonian and Liouvillian assembly.
//!
//! Vectorization is column-stacking: vec(ρ) lays out ρ column by column, so
//! the entry ρ[i,j] sits at index j*D + i and vec(AρB) = (Bᵀ ⊗ A) vec(ρ).
//! `build_liouvillian` returns the full generator L with the 2π applied, so
//! that d/dt vec(ρ) = L vec(ρ) holds with time in ns and all parameters in
//! GHz.

use ndarray::{Array1, ArrayView1};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::operators::{kron, make_ops, CMatrix, Operator};
use crate::params::{DriveTarget, SystemParams};

pub const TWO_PI: f64 = std::f64::consts::TAU;

/// Linear map on vectorized density matrices, stored dense as D² x D².
#[derive(Debug, Clone)]
pub struct Superoperator {
    hilbert_dim: usize,
    matrix: CMatrix,
}

impl Superoperator {
    pub fn new(hilbert_dim: usize, matrix: CMatrix) -> Result<Self> {
        let d2 = hilbert_dim * hilbert_dim;
        if matrix.shape() != [d2, d2] {
            return Err(Error::DimensionMismatch(format!(
                "expected {d2}x{d2} superoperator, got {:?}",
                matrix.shape()
            )));
        }
        Ok(Superoperator { hilbert_dim, matrix })
    }

    pub fn zeros(hilbert_dim: usize) -> Self {
        let d2 = hilbert_dim * hilbert_dim;
        Superoperator { hilbert_dim, matrix: CMatrix::zeros((d2, d2)) }
    }

    pub fn hilbert_dim(&self) -> usize {
        self.hilbert_dim
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn scale(&self, c: Complex64) -> Superoperator {
        Superoperator { hilbert_dim: self.hilbert_dim, matrix: self.matrix.mapv(|z| z * c) }
    }

    pub fn add(&self, other: &Superoperator) -> Superoperator {
        assert_eq!(self.hilbert_dim, other.hilbert_dim);
        Superoperator { hilbert_dim: self.hilbert_dim, matrix: &self.matrix + &other.matrix }
    }

    pub fn apply_vec(&self, v: &ArrayView1<Complex64>) -> Array1<Complex64> {
        self.matrix.dot(v)
    }

    /// Apply to a density matrix given in matrix form.
    pub fn apply_matrix(&self, rho: &CMatrix) -> CMatrix {
        let v = vec_density(rho);
        let w = self.matrix.dot(&v);
        unvec_density(&w.view(), self.hilbert_dim)
    }

    /// Largest absolute column sum of the diagonal-row functional, i.e. how
    /// far tr(L ρ) is from vanishing. Relative to the largest matrix entry.
    pub fn trace_defect(&self) -> f64 {
        let d = self.hilbert_dim;
        let d2 = d * d;
        let mut worst: f64 = 0.0;
        for c in 0..d2 {
            let mut s = Complex64::new(0.0, 0.0);
            for i in 0..d {
                s += self.matrix[[i * d + i, c]];
            }
            worst = worst.max(s.norm());
        }
        let scale = self.matrix.iter().map(|z| z.norm()).fold(0.0_f64, f64::max);
        if scale > 0.0 {
            worst / scale
        } else {
            worst
        }
    }
}

/// Column-stacking vectorization.
pub fn vec_density(rho: &CMatrix) -> Array1<Complex64> {
    let (d, dc) = (rho.nrows(), rho.ncols());
    assert_eq!(d, dc, "density matrix must be square");
    let mut v = Array1::zeros(d * d);
    for j in 0..d {
        for i in 0..d {
            v[j * d + i] = rho[[i, j]];
        }
    }
    v
}

/// Inverse of `vec_density`.
pub fn unvec_density(v: &ArrayView1<Complex64>, d: usize) -> CMatrix {
    assert_eq!(v.len(), d * d, "vector length does not match dimension");
    let mut rho = CMatrix::zeros((d, d));
    for j in 0..d {
        for i in 0..d {
            rho[[i, j]] = v[j * d + i];
        }
    }
    rho
}

/// Superoperator for the commutator part: -i (I ⊗ H - Hᵀ ⊗ I).
/// No 2π here; `build_liouvillian` applies it to the total generator.
pub fn commutator_superop(h: &Operator) -> Superoperator {
    let d = h.dims().total();
    let id = CMatrix::eye(d);
    let left = kron(&id, h.matrix());
    let right = kron(&h.matrix().t().to_owned(), &id);
    let m = (&left - &right).mapv(|z| z * Complex64::new(0.0, -1.0));
    Superoperator { hilbert_dim: d, matrix: m }
}

/// Rate-free Lindblad dissipator of collapse operator C in vectorized form:
/// conj(C) ⊗ C - ½ I ⊗ C†C - ½ (C†C)ᵀ ⊗ I.
pub fn dissipator(c: &Operator) -> Superoperator {
    let d = c.dims().total();
    let id = CMatrix::eye(d);
    let cdc = c.dagger().dot(c).into_matrix();
    let jump = kron(&c.matrix().mapv(|z| z.conj()), c.matrix());
    let left = kron(&id, &cdc);
    let right = kron(&cdc.t().to_owned(), &id);
    let m = &jump - &(&left + &right).mapv(|z| z * Complex64::new(0.5, 0.0));
    Superoperator { hilbert_dim: d, matrix: m }
}

/// H/ħ = Δc a†a + Δx σz/2 + g(σ₊a + a†σ₋) + drive, all in GHz.
/// The cavity drive term is sqrt(κ)·J·(a + a†); in the qubit validation mode
/// it is J/2·(σ₊ + σ₋) with J read as a direct Rabi rate.
pub fn build_hamiltonian(p: &SystemParams) -> Result<Operator> {
    p.validate()?;
    let ops = make_ops(p.dims()?)?;
    let num = ops.a_dag.dot(&ops.a);
    let jc = ops.sigma_p.dot(&ops.a).add(&ops.a_dag.dot(&ops.sigma_m));
    let mut h = num
        .scale(Complex64::new(p.delta_c, 0.0))
        .add(&ops.sigma_z.scale(Complex64::new(p.delta_x / 2.0, 0.0)))
        .add(&jc.scale(Complex64::new(p.g, 0.0)));
    match p.drive_target {
        DriveTarget::Cavity => {
            let amp = p.kappa.sqrt() * p.drive_j;
            let drive = ops.a.add(&ops.a_dag).scale(Complex64::new(amp, 0.0));
            h = h.add(&drive);
        }
        DriveTarget::Qubit => {
            let drive = ops.sigma_p.add(&ops.sigma_m).scale(Complex64::new(p.drive_j / 2.0, 0.0));
            h = h.add(&drive);
        }
    }
    Ok(h)
}

/// Full Lindblad generator in 1/ns units:
/// L = 2π·[-i(I⊗H - Hᵀ⊗I) + γD(σ₋) + κD(a) + γdD(σ₊σ₋)
///        + γ_ph_ads·D(a†σ₋) + γ_ph_asp·D(aσ₊)].
pub fn build_liouvillian(p: &SystemParams) -> Result<Superoperator> {
    let h = build_hamiltonian(p)?;
    let ops = make_ops(p.dims()?)?;
    let mut l = commutator_superop(&h);
    let channels: [(f64, Operator); 5] = [
        (p.gamma, ops.sigma_m.clone()),
        (p.kappa, ops.a.clone()),
        (p.gamma_d, ops.sigma_p.dot(&ops.sigma_m)),
        (p.gamma_ph_ads, ops.a_dag.dot(&ops.sigma_m)),
        (p.gamma_ph_asp, ops.a.dot(&ops.sigma_p)),
    ];
    for (rate, c) in channels {
        if rate != 0.0 {
            l = l.add(&dissipator(&c).scale(Complex64::new(rate, 0.0)));
        }
    }
    Ok(l.scale(Complex64::new(TWO_PI, 0.0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{QubitState, SpaceDims};
    use ndarray_linalg::Eig;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn seeded_matrix(n: usize, seed: u64, scale: f64) -> CMatrix {
        // splitmix64-based deterministic fill
        let mut state = seed;
        let mut next = move || {
            state = state.wrapping_add(0x9e3779b97f4a7c15);
            let mut z = state;
            z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
            z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
            z = z ^ (z >> 31);
            (z as f64 / u64::MAX as f64) * 2.0 - 1.0
        };
        let mut m = CMatrix::zeros((n, n));
        for i in 0..n {
            for j in 0..n {
                m[[i, j]] = c(next() * scale, next() * scale);
            }
        }
        m
    }

    fn seeded_hermitian(n: usize, seed: u64) -> CMatrix {
        let m = seeded_matrix(n, seed, 1.0);
        let mh = m.t().mapv(|z| z.conj());
        (&m + &mh).mapv(|z| z * c(0.5, 0.0))
    }

    fn max_abs(m: &CMatrix) -> f64 {
        m.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn vec_of_product_matches_kron_identity() {
        // vec(AρB) = (Bᵀ ⊗ A) vec(ρ), the convention everything rests on
        for (seed, d) in [(1u64, 3usize), (2, 4), (3, 6)] {
            let a = seeded_matrix(d, seed, 1.0);
            let b = seeded_matrix(d, seed + 10, 1.0);
            let rho = seeded_matrix(d, seed + 20, 1.0);
            let direct = a.dot(&rho).dot(&b);
            let sup = kron(&b.t().to_owned(), &a);
            let via_vec = unvec_density(&sup.dot(&vec_density(&rho)).view(), d);
            let diff = (&direct - &via_vec).mapv(|z| z);
            assert!(max_abs(&diff) < 1e-12 * max_abs(&direct).max(1.0));
        }
    }

    #[test]
    fn vec_unvec_roundtrip_and_layout() {
        let rho = seeded_matrix(5, 77, 1.0);
        let v = vec_density(&rho);
        // column stacking: ρ[i,j] sits at j*D + i
        assert_eq!(v[2 * 5 + 3], rho[[3, 2]]);
        let back = unvec_density(&v.view(), 5);
        assert!(max_abs(&(&back - &rho)) == 0.0);
    }

    #[test]
    fn dissipator_matches_direct_formula() {
        // D(C)ρ = CρC† - ½{C†C, ρ} applied entrywise, seeded pairs
        for fock in [2usize, 3, 5] {
            let dims = SpaceDims::new(fock).unwrap();
            let d = dims.total();
            for k in 0..34 {
                let seed = (fock * 100 + k) as u64;
                let cmat = seeded_matrix(d, seed, 1.0);
                let rho = seeded_hermitian(d, seed + 1);
                let cop = Operator::new(dims, cmat.clone()).unwrap();
                let sup = dissipator(&cop);
                let got = sup.apply_matrix(&rho);

                let cdag = cmat.t().mapv(|z| z.conj());
                let cdc = cdag.dot(&cmat);
                let want = cmat.dot(&rho).dot(&cdag)
                    - (cdc.dot(&rho) + rho.dot(&cdc)).mapv(|z| z * c(0.5, 0.0));
                let scale = max_abs(&want).max(1.0);
                assert!(
                    max_abs(&(&got - &want)) < 1e-11 * scale,
                    "fock {fock} seed {seed}"
                );
            }
        }
    }

    #[test]
    fn liouvillian_annihilates_trace() {
        let p = SystemParams::nominal().with_drive(3.0).with_fock_dim(6);
        let lv = build_liouvillian(&p).unwrap();
        assert!(lv.trace_defect() < 1e-10, "defect {}", lv.trace_defect());

        let q = SystemParams { gamma_ph_ads: 0.1, gamma_ph_asp: 0.05, ..p };
        let lv2 = build_liouvillian(&q).unwrap();
        assert!(lv2.trace_defect() < 1e-10);
    }

    #[test]
    fn liouvillian_maps_hermitian_to_hermitian() {
        let p = SystemParams::nominal().with_drive(2.5).with_fock_dim(4);
        let lv = build_liouvillian(&p).unwrap();
        let d = lv.hilbert_dim();
        let rho = seeded_hermitian(d, 4242);
        let out = lv.apply_matrix(&rho);
        let outh = out.t().mapv(|z| z.conj());
        assert!(max_abs(&(&out - &outh)) < 1e-11 * max_abs(&out).max(1.0));
    }

    #[test]
    fn spectrum_lies_in_left_half_plane_with_unique_kernel() {
        // dissipative generator: Re λ <= 0 and exactly one zero eigenvalue
        let p = SystemParams::nominal().with_drive(1.5).with_fock_dim(5);
        let lv = build_liouvillian(&p).unwrap();
        let (vals, _) = lv.matrix().eig().unwrap();
        let scale = vals.iter().map(|z| z.norm()).fold(0.0_f64, f64::max);
        let mut zero_count = 0;
        for lam in vals.iter() {
            assert!(
                lam.re <= 1e-8 * scale,
                "eigenvalue {lam} has positive real part at scale {scale}"
            );
            if lam.norm() < 1e-9 * scale {
                zero_count += 1;
            }
        }
        assert_eq!(zero_count, 1, "kernel dimension");
    }

    #[test]
    fn hamiltonian_is_hermitian_and_has_frozen_elements() {
        let p = SystemParams::nominal().with_drive(1.0).with_fock_dim(4);
        let h = build_hamiltonian(&p).unwrap();
        assert!(h.is_hermitian(1e-12));

        let dims = p.dims().unwrap();
        let e0 = dims.index(QubitState::Excited, 0);
        let g0 = dims.index(QubitState::Ground, 0);
        let g1 = dims.index(QubitState::Ground, 1);
        // Jaynes-Cummings element g·⟨e,0|σ₊a|g,1⟩ = 15.3
        assert!((h.matrix()[[e0, g1]] - c(15.3, 0.0)).norm() < 1e-12);
        // cavity drive element √κ·J·⟨g,1|a†|g,0⟩ = 6·1 at κ = 36, J = 1
        assert!((h.matrix()[[g1, g0]] - c(6.0, 0.0)).norm() < 1e-12);
        // detunings on the diagonal: Δc·n + Δx/2·(±1)
        let e1 = dims.index(QubitState::Excited, 1);
        assert!((h.matrix()[[e1, e1]] - c(p.delta_c + p.delta_x / 2.0, 0.0)).norm() < 1e-12);
        assert!((h.matrix()[[g0, g0]] - c(-p.delta_x / 2.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn excitation_number_is_conserved_without_drive() {
        // [H, a†a + σ₊σ₋] = 0 when J = 0, even with detunings
        let p = SystemParams::nominal().with_fock_dim(5);
        let h = build_hamiltonian(&p).unwrap();
        let ops = make_ops(p.dims().unwrap()).unwrap();
        let n_exc = ops.a_dag.dot(&ops.a).add(&ops.sigma_p.dot(&ops.sigma_m));
        let comm = h.dot(&n_exc).sub(&n_exc.dot(&h));
        let scale = max_abs(h.matrix()).max(1.0);
        assert!(max_abs(comm.matrix()) < 1e-12 * scale);
    }

    #[test]
    fn qubit_drive_mode_uses_direct_rabi_rate() {
        let mut p = SystemParams::nominal().with_drive(7.0).with_fock_dim(3);
        p.drive_target = DriveTarget::Qubit;
        let h = build_hamiltonian(&p).unwrap();
        let dims = p.dims().unwrap();
        let e0 = dims.index(QubitState::Excited, 0);
        let g0 = dims.index(QubitState::Ground, 0);
        // J/2·⟨e,0|σ₊|g,0⟩ with J read as the Rabi rate directly
        assert!((h.matrix()[[e0, g0]] - c(3.5, 0.0)).norm() < 1e-12);
    }
}
