//! Dense matrix exponential by scaling and squaring with Padé approximants,
//! using the Higham degree-selection thresholds (the same scheme SciPy and
//! Julia use, minus the norm-estimation refinements, which matter only for
//! much larger matrices than occur here).

use ndarray_linalg::Inverse;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::operators::CMatrix;

const THETA_3: f64 = 1.495585217958292e-2;
const THETA_5: f64 = 2.539398330063230e-1;
const THETA_7: f64 = 9.504178996162932e-1;
const THETA_9: f64 = 2.097847961257068e0;
const THETA_13: f64 = 5.371920351148152e0;

const B3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const B5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const B7: [f64; 8] = [
    17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0,
];
const B9: [f64; 10] = [
    17643225600.0,
    8821612800.0,
    2075673600.0,
    302702400.0,
    30270240.0,
    2162160.0,
    110880.0,
    3960.0,
    90.0,
    1.0,
];
const B13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

/// Maximum number of squaring steps; beyond this the squared rounding error
/// would dominate. One-norms up to THETA_13 * 2^MAX_SQUARINGS are accepted.
pub const MAX_SQUARINGS: u32 = 40;

pub fn one_norm(a: &CMatrix) -> f64 {
    let mut worst = 0.0_f64;
    for col in a.columns() {
        let s: f64 = col.iter().map(|z| z.norm()).sum();
        worst = worst.max(s);
    }
    worst
}

/// exp(A) for a square complex matrix.
pub fn matrix_exp(a: &CMatrix) -> Result<CMatrix> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::DimensionMismatch(format!(
            "matrix_exp needs a square matrix, got {:?}",
            a.shape()
        )));
    }
    if a.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Numerics("matrix_exp input has non-finite entries".into()));
    }
    let norm = one_norm(a);
    let bound = THETA_13 * 2.0_f64.powi(MAX_SQUARINGS as i32);
    if norm > bound {
        return Err(Error::PropagatorNorm { norm, bound });
    }

    if norm <= THETA_3 {
        return pade(a, &B3);
    }
    if norm <= THETA_5 {
        return pade(a, &B5);
    }
    if norm <= THETA_7 {
        return pade(a, &B7);
    }
    if norm <= THETA_9 {
        return pade(a, &B9);
    }

    let s = if norm > THETA_13 {
        (norm / THETA_13).log2().ceil() as u32
    } else {
        0
    };
    let scaled = a.mapv(|z| z / 2.0_f64.powi(s as i32));
    let mut x = pade13(&scaled)?;
    for _ in 0..s {
        x = x.dot(&x);
    }
    Ok(x)
}

fn real(c: f64) -> Complex64 {
    Complex64::new(c, 0.0)
}

/// Padé of odd degree <= 9 from precomputed even powers.
fn pade(a: &CMatrix, b: &[f64]) -> Result<CMatrix> {
    let n = a.nrows();
    let id = CMatrix::eye(n);
    let mut even_powers = vec![id.clone()];
    let a2 = a.dot(a);
    even_powers.push(a2);
    // powers A^4, A^6, A^8 as needed by the degree
    while even_powers.len() < (b.len() + 1) / 2 {
        let next = even_powers.last().unwrap().dot(&even_powers[1]);
        even_powers.push(next);
    }
    let mut u_poly = CMatrix::zeros((n, n));
    let mut v = CMatrix::zeros((n, n));
    for (k, &coeff) in b.iter().enumerate() {
        let p = &even_powers[k / 2];
        if k % 2 == 1 {
            u_poly = u_poly + p.mapv(|z| z * real(coeff));
        } else {
            v = v + p.mapv(|z| z * real(coeff));
        }
    }
    let u = a.dot(&u_poly);
    solve_pade(&u, &v)
}

/// Degree-13 Padé with the factored polynomial evaluation.
fn pade13(a: &CMatrix) -> Result<CMatrix> {
    let n = a.nrows();
    let id = CMatrix::eye(n);
    let a2 = a.dot(a);
    let a4 = a2.dot(&a2);
    let a6 = a4.dot(&a2);
    let b = &B13;
    let w1 = a6.mapv(|z| z * real(b[13])) + a4.mapv(|z| z * real(b[11])) + a2.mapv(|z| z * real(b[9]));
    let w2 = a6.mapv(|z| z * real(b[7]))
        + a4.mapv(|z| z * real(b[5]))
        + a2.mapv(|z| z * real(b[3]))
        + id.mapv(|z| z * real(b[1]));
    let u = a.dot(&(a6.dot(&w1) + w2));
    let z1 = a6.mapv(|z| z * real(b[12])) + a4.mapv(|z| z * real(b[10])) + a2.mapv(|z| z * real(b[8]));
    let v = a6.dot(&z1)
        + a6.mapv(|z| z * real(b[6]))
        + a4.mapv(|z| z * real(b[4]))
        + a2.mapv(|z| z * real(b[2]))
        + id.mapv(|z| z * real(b[0]));
    solve_pade(&u, &v)
}

/// (V - U)^{-1} (V + U).
fn solve_pade(u: &CMatrix, v: &CMatrix) -> Result<CMatrix> {
    let denom = v - u;
    let numer = v + u;
    let inv = denom
        .inv()
        .map_err(|e| Error::LinearSolve(format!("Padé denominator: {e}")))?;
    Ok(inv.dot(&numer))
}
