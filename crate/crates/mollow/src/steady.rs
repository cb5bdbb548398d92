//! Steady state of the Lindblad generator: the one-dimensional nullspace of
//! L, found by replacing one row of L with the trace constraint and solving
//! the resulting dense system by LU. Two different replaced rows are solved
//! and compared; they agree only when the nullspace is one-dimensional, which
//! turns degeneracy into a detectable disagreement instead of silent garbage.

use ndarray::Array1;
use ndarray_linalg::Solve;
use num_complex::Complex64;

use crate::density::DensityMatrix;
use crate::error::{Error, Result};
use crate::liouvillian::{unvec_density, vec_density, Superoperator};
use crate::operators::{dagger, CMatrix, SpaceDims};

/// Residual tolerance relative to the Frobenius norm of L.
pub const RESIDUAL_RTOL: f64 = 1e-9;

/// Tolerance for agreement between the two row-replacement solves, relative
/// to the largest density-matrix entry.
const UNIQUENESS_RTOL: f64 = 1e-7;

fn solve_with_replaced_row(
    lv: &Superoperator,
    row: usize,
    scale: f64,
) -> Option<CMatrix> {
    let d = lv.hilbert_dim();
    let d2 = d * d;
    let mut m = lv.matrix().clone();
    let mut b = Array1::<Complex64>::zeros(d2);
    for c in 0..d2 {
        m[[row, c]] = Complex64::new(0.0, 0.0);
    }
    for i in 0..d {
        m[[row, i * d + i]] = Complex64::new(scale, 0.0);
    }
    b[row] = Complex64::new(scale, 0.0);
    let v = m.solve(&b).ok()?;
    let rho = unvec_density(&v.view(), d);
    let tr: Complex64 = rho.diag().sum();
    if tr.norm() < 1e-300 || !tr.is_finite() {
        return None;
    }
    Some(rho.mapv(|z| z / tr))
}

pub fn steady_state(lv: &Superoperator) -> Result<DensityMatrix> {
    let d = lv.hilbert_dim();
    if d % 2 != 0 {
        return Err(Error::InvalidDims(format!(
            "hilbert dimension {d} is not 2*fock_dim"
        )));
    }
    let dims = SpaceDims::new(d / 2)?;
    let d2 = d * d;

    let scale = lv.matrix().iter().map(|z| z.norm()).fold(0.0_f64, f64::max);
    if scale == 0.0 {
        return Err(Error::SingularSteadyState);
    }
    let l_fro = lv.matrix().iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();

    let mut solutions: Vec<CMatrix> = Vec::new();
    for &row in &[0usize, d + 1, d2 - 1] {
        if let Some(s) = solve_with_replaced_row(lv, row, scale) {
            solutions.push(s);
            if solutions.len() == 2 {
                break;
            }
        }
    }
    if solutions.len() < 2 {
        return Err(Error::SingularSteadyState);
    }
    let peak = solutions[0].iter().map(|z| z.norm()).fold(0.0_f64, f64::max);
    let disagreement = solutions[0]
        .iter()
        .zip(solutions[1].iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max);
    if !disagreement.is_finite() || disagreement > UNIQUENESS_RTOL * peak.max(1e-300) {
        return Err(Error::SingularSteadyState);
    }

    let sym = (&solutions[0] + &dagger(&solutions[0])).mapv(|z| z * Complex64::new(0.5, 0.0));
    let tr: Complex64 = sym.diag().sum();
    let rho = sym.mapv(|z| z / tr);

    let resid_vec = lv.matrix().dot(&vec_density(&rho));
    let residual = resid_vec.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let tolerance = RESIDUAL_RTOL * l_fro;
    if residual > tolerance {
        return Err(Error::SteadyStateResidual { residual, tolerance });
    }
    DensityMatrix::new(dims, rho)
}
