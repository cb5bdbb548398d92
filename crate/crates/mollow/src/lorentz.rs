//! Multi-Lorentzian least squares: model, analytic Jacobian and a
//! Levenberg-Marquardt loop with optional frozen parameters.
//!
//! Every peak is parameterized as L(ω) = (A/2π)·Γ/((ω-c)² + (Γ/2)²): area
//! A, FWHM Γ, center c, peak height 2A/(πΓ).

use ndarray::{Array1, Array2};
use ndarray_linalg::{Inverse, Solve};

use crate::error::{Error, Result};

/// Ideal Lorentzian component, also used to synthesize test spectra.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LorentzianPeak {
    pub center: f64,
    pub fwhm: f64,
    pub area: f64,
}

impl LorentzianPeak {
    pub fn height(&self) -> f64 {
        2.0 * self.area / (std::f64::consts::PI * self.fwhm)
    }

    pub fn eval(&self, omega: f64) -> f64 {
        let d = omega - self.center;
        self.area / (2.0 * std::f64::consts::PI) * self.fwhm
            / (d * d + self.fwhm * self.fwhm / 4.0)
    }
}

/// Baseline plus sum of Lorentzians evaluated on a grid.
pub fn eval_model(baseline: f64, peaks: &[LorentzianPeak], omega: &[f64]) -> Vec<f64> {
    omega
        .iter()
        .map(|&w| baseline + peaks.iter().map(|p| p.eval(w)).sum::<f64>())
        .collect()
}

/// One fitted component with 1σ uncertainties from the local covariance.
/// Frozen components carry zero uncertainty.
#[derive(Debug, Clone, Copy)]
pub struct FittedPeak {
    pub center: f64,
    pub fwhm: f64,
    pub area: f64,
    pub center_sigma: f64,
    pub fwhm_sigma: f64,
    pub area_sigma: f64,
    pub fixed: bool,
}

impl FittedPeak {
    pub fn height(&self) -> f64 {
        2.0 * self.area / (std::f64::consts::PI * self.fwhm)
    }

    pub fn peak(&self) -> LorentzianPeak {
        LorentzianPeak { center: self.center, fwhm: self.fwhm, area: self.area }
    }
}

#[derive(Debug, Clone)]
pub struct LorentzianFit {
    pub baseline: f64,
    pub baseline_sigma: f64,
    /// In the order the initial guesses were given; `fit_auto` sorts by
    /// center.
    pub peaks: Vec<FittedPeak>,
    pub sse: f64,
    pub iterations: usize,
    pub converged: bool,
    /// True when the normal matrix was too ill conditioned for parameter
    /// uncertainties (degenerate or underdetermined model).
    pub covariance_defective: bool,
}

impl LorentzianFit {
    /// Peak whose center is nearest to ω.
    pub fn nearest_peak(&self, omega: f64) -> Option<&FittedPeak> {
        self.peaks.iter().min_by(|a, b| {
            (a.center - omega)
                .abs()
                .total_cmp(&(b.center - omega).abs())
        })
    }
}

#[derive(Debug, Clone)]
pub struct FitOptions {
    pub max_iterations: usize,
    /// Relative infinity-norm gradient threshold for convergence.
    pub gradient_tol: f64,
    /// Mask over the packed parameter vector [b, (c, Γ, A) per peak]; true
    /// entries stay at their initial values. Empty means all free.
    pub fixed_params: Vec<bool>,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions { max_iterations: 200, gradient_tol: 1e-10, fixed_params: Vec::new() }
    }
}

impl FitOptions {
    /// Freeze all three parameters of peak `idx` (order of the initial
    /// guess) given `n_peaks` components in total.
    pub fn with_fixed_peak(mut self, idx: usize, n_peaks: usize) -> Self {
        if self.fixed_params.len() != 1 + 3 * n_peaks {
            self.fixed_params = vec![false; 1 + 3 * n_peaks];
        }
        for k in 0..3 {
            self.fixed_params[1 + 3 * idx + k] = true;
        }
        self
    }
}

fn pack(baseline: f64, peaks: &[LorentzianPeak]) -> Vec<f64> {
    let mut p = Vec::with_capacity(1 + 3 * peaks.len());
    p.push(baseline);
    for pk in peaks {
        p.extend_from_slice(&[pk.center, pk.fwhm, pk.area]);
    }
    p
}

fn unpack(p: &[f64]) -> (f64, Vec<LorentzianPeak>) {
    let peaks = p[1..]
        .chunks_exact(3)
        .map(|c| LorentzianPeak { center: c[0], fwhm: c[1], area: c[2] })
        .collect();
    (p[0], peaks)
}

/// Residuals r_i = y_i - model(ω_i) and the SSE.
fn residuals(p: &[f64], omega: &[f64], y: &[f64]) -> (Vec<f64>, f64) {
    let (b, peaks) = unpack(p);
    let model = eval_model(b, &peaks, omega);
    let r: Vec<f64> = y.iter().zip(&model).map(|(yi, mi)| yi - mi).collect();
    let sse = r.iter().map(|v| v * v).sum();
    (r, sse)
}

/// Analytic Jacobian of the model, full parameter set; column j is
/// ∂model/∂p_j on the grid.
fn jacobian(p: &[f64], omega: &[f64]) -> Array2<f64> {
    let n = omega.len();
    let m = p.len();
    let mut jac = Array2::zeros((n, m));
    let (_, peaks) = unpack(p);
    for (i, &w) in omega.iter().enumerate() {
        jac[[i, 0]] = 1.0;
        for (k, pk) in peaks.iter().enumerate() {
            let d = w - pk.center;
            let denom = d * d + pk.fwhm * pk.fwhm / 4.0;
            let pref = pk.area / (2.0 * std::f64::consts::PI);
            jac[[i, 1 + 3 * k]] = pref * pk.fwhm * 2.0 * d / (denom * denom);
            jac[[i, 2 + 3 * k]] = pref * (d * d - pk.fwhm * pk.fwhm / 4.0) / (denom * denom);
            jac[[i, 3 + 3 * k]] =
                pk.fwhm / (2.0 * std::f64::consts::PI * denom);
        }
    }
    jac
}

/// Initial guess: baseline at the sample minimum, peaks at the `n_peaks`
/// tallest local maxima at least two grid steps apart, widths from the
/// half-height crossings.
pub fn initial_guess(omega: &[f64], y: &[f64], n_peaks: usize) -> Result<(f64, Vec<LorentzianPeak>)> {
    if omega.len() != y.len() || omega.len() < 5 {
        return Err(Error::InvalidData("need at least 5 samples for a peak guess".into()));
    }
    if n_peaks == 0 {
        return Err(Error::InvalidParams("n_peaks must be >= 1".into()));
    }
    let baseline = y.iter().cloned().fold(f64::INFINITY, f64::min);

    let mut maxima: Vec<usize> = (1..y.len() - 1)
        .filter(|&i| y[i] > y[i - 1] && y[i] >= y[i + 1])
        .collect();
    maxima.sort_by(|&a, &b| y[b].total_cmp(&y[a]));

    let mut chosen: Vec<usize> = Vec::new();
    for i in maxima {
        if chosen.iter().all(|&j| i.abs_diff(j) >= 2) {
            chosen.push(i);
            if chosen.len() == n_peaks {
                break;
            }
        }
    }
    if chosen.len() < n_peaks {
        return Err(Error::FitFailure(format!(
            "found only {} separated maxima, need {n_peaks}",
            chosen.len()
        )));
    }

    let step = (omega[omega.len() - 1] - omega[0]) / (omega.len() - 1) as f64;
    let peaks = chosen
        .iter()
        .map(|&i| {
            let height = y[i] - baseline;
            let half = baseline + height / 2.0;
            let mut lo = i;
            while lo > 0 && y[lo] > half {
                lo -= 1;
            }
            let mut hi = i;
            while hi + 1 < y.len() && y[hi] > half {
                hi += 1;
            }
            let fwhm = ((hi - lo) as f64 * step).max(2.0 * step.abs());
            LorentzianPeak {
                center: omega[i],
                fwhm,
                area: std::f64::consts::PI * fwhm * height / 2.0,
            }
        })
        .collect();
    Ok((baseline, peaks))
}

/// Levenberg-Marquardt refinement of a multi-Lorentzian model.
///
/// Fitted peaks come back in the order of `peaks0`, so a caller that gave
/// a component a role (a frozen cavity line, say) can find it by index.
pub fn fit_lorentzians(
    omega: &[f64],
    y: &[f64],
    baseline0: f64,
    peaks0: &[LorentzianPeak],
    opts: &FitOptions,
) -> Result<LorentzianFit> {
    if omega.len() != y.len() {
        return Err(Error::DimensionMismatch("grid and data lengths differ".into()));
    }
    if peaks0.is_empty() {
        return Err(Error::InvalidParams("need at least one peak".into()));
    }
    if omega.iter().chain(y.iter()).any(|v| !v.is_finite()) {
        return Err(Error::InvalidData("non-finite sample in fit input".into()));
    }
    if peaks0.iter().any(|p| !(p.fwhm > 0.0)) {
        return Err(Error::InvalidParams("initial widths must be positive".into()));
    }
    let n_par = 1 + 3 * peaks0.len();
    let fixed = if opts.fixed_params.is_empty() {
        vec![false; n_par]
    } else if opts.fixed_params.len() == n_par {
        opts.fixed_params.clone()
    } else {
        return Err(Error::InvalidParams(format!(
            "fixed mask has {} entries, model has {n_par} parameters",
            opts.fixed_params.len()
        )));
    };
    let free: Vec<usize> = (0..n_par).filter(|&j| !fixed[j]).collect();
    if free.is_empty() {
        return Err(Error::InvalidParams("all parameters frozen".into()));
    }
    if omega.len() <= free.len() {
        return Err(Error::InvalidData(format!(
            "{} samples cannot constrain {} free parameters",
            omega.len(),
            free.len()
        )));
    }

    let span = (omega[omega.len() - 1] - omega[0]).abs();
    let (c_lo, c_hi) = (omega[0].min(omega[omega.len() - 1]) - span, omega[0].max(omega[omega.len() - 1]) + span);

    let mut p = pack(baseline0, peaks0);
    let (mut r, mut sse) = residuals(&p, omega, y);
    let mut lambda = 1e-3;
    let mut converged = false;
    let mut iterations = 0;

    for iter in 0..opts.max_iterations {
        iterations = iter + 1;
        let jac = jacobian(&p, omega);

        // normal equations restricted to the free parameters
        let nf = free.len();
        let mut jtj = Array2::<f64>::zeros((nf, nf));
        let mut jtr = Array1::<f64>::zeros(nf);
        for (a, &ja) in free.iter().enumerate() {
            for (b, &jb) in free.iter().enumerate() {
                let mut s = 0.0;
                for i in 0..omega.len() {
                    s += jac[[i, ja]] * jac[[i, jb]];
                }
                jtj[[a, b]] = s;
            }
            let mut s = 0.0;
            for i in 0..omega.len() {
                s += jac[[i, ja]] * r[i];
            }
            jtr[a] = s;
        }

        let grad_inf = jtr.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        if grad_inf <= opts.gradient_tol * sse.max(1.0) {
            converged = true;
            break;
        }

        // damped step, retried with stronger damping on failure
        let mut stepped = false;
        while lambda <= 1e12 {
            let mut damped = jtj.clone();
            for a in 0..nf {
                let d = jtj[[a, a]].max(1e-30);
                damped[[a, a]] += lambda * d;
            }
            let delta = match damped.solve(&jtr) {
                Ok(d) => d,
                Err(_) => {
                    lambda *= 10.0;
                    continue;
                }
            };
            let mut trial = p.clone();
            for (a, &j) in free.iter().enumerate() {
                trial[j] += delta[a];
            }
            // a free center more than a span outside the data is degenerate
            // with the baseline, so such steps are rejected like negative
            // widths; frozen centers are the caller's choice and may sit
            // anywhere (a held wing outside a narrow window is legitimate)
            let shape_ok = trial[1..].chunks_exact(3).enumerate().all(|(k, c)| {
                c[1] > 0.0 && (fixed[1 + 3 * k] || (c[0] >= c_lo && c[0] <= c_hi))
            });
            if shape_ok {
                let (r2, sse2) = residuals(&trial, omega, y);
                if sse2.is_finite() && sse2 < sse {
                    p = trial;
                    r = r2;
                    sse = sse2;
                    lambda = (lambda / 10.0).max(1e-14);
                    stepped = true;
                    break;
                }
            }
            lambda *= 10.0;
        }
        if !stepped {
            // no downhill direction left at any damping: local minimum
            converged = grad_inf <= opts.gradient_tol * sse.max(1.0) * 1e4;
            break;
        }
    }
    if !p.iter().all(|v| v.is_finite()) {
        return Err(Error::FitFailure("parameters diverged to non-finite values".into()));
    }

    // covariance of the free parameters: (JᵀJ)⁻¹ · SSE/(n - p)
    let jac = jacobian(&p, omega);
    let nf = free.len();
    let mut jtj = Array2::<f64>::zeros((nf, nf));
    for (a, &ja) in free.iter().enumerate() {
        for (b, &jb) in free.iter().enumerate() {
            let mut s = 0.0;
            for i in 0..omega.len() {
                s += jac[[i, ja]] * jac[[i, jb]];
            }
            jtj[[a, b]] = s;
        }
    }
    let dof = (omega.len() - nf) as f64;
    let mut sigmas = vec![0.0; n_par];
    let mut covariance_defective = false;
    match jtj.inv() {
        Ok(cov) => {
            for (a, &j) in free.iter().enumerate() {
                let v = cov[[a, a]] * sse / dof;
                if v.is_finite() && v >= 0.0 {
                    sigmas[j] = v.sqrt();
                } else {
                    covariance_defective = true;
                }
            }
        }
        Err(_) => covariance_defective = true,
    }

    let (baseline, peaks) = unpack(&p);
    let fitted: Vec<FittedPeak> = peaks
        .iter()
        .enumerate()
        .map(|(k, pk)| FittedPeak {
            center: pk.center,
            fwhm: pk.fwhm,
            area: pk.area,
            center_sigma: sigmas[1 + 3 * k],
            fwhm_sigma: sigmas[2 + 3 * k],
            area_sigma: sigmas[3 + 3 * k],
            fixed: fixed[1 + 3 * k] && fixed[2 + 3 * k] && fixed[3 + 3 * k],
        })
        .collect();

    Ok(LorentzianFit {
        baseline,
        baseline_sigma: sigmas[0],
        peaks: fitted,
        sse,
        iterations,
        converged,
        covariance_defective,
    })
}

/// Convenience wrapper: guess then refine. Peaks are returned sorted by
/// center since the height-ordered guess carries no meaning.
pub fn fit_auto(omega: &[f64], y: &[f64], n_peaks: usize, opts: &FitOptions) -> Result<LorentzianFit> {
    let (b0, peaks0) = initial_guess(omega, y, n_peaks)?;
    let mut fit = fit_lorentzians(omega, y, b0, &peaks0, opts)?;
    fit.peaks.sort_by(|a, b| a.center.total_cmp(&b.center));
    Ok(fit)
}
