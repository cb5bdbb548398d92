//! Calibration of the two phonon-assisted rates against a measured
//! linewidth-versus-drive curve: a drive-to-Rabi map, a cached linewidth
//! predictor running the full simulation pipeline, and a damped
//! Gauss-Newton fit in the two rates.

use std::collections::HashMap;
use std::sync::Mutex;

use ndarray::{Array1, Array2};
use ndarray_linalg::{Inverse, Solve};

use crate::analysis::fit_lower_sideband;
use crate::error::{Error, Result};
use crate::params::SystemParams;
use crate::pipeline::{simulate_spectrum, GridOptions};

/// Default relative uncertainty assigned to linewidth points without one.
pub const DEFAULT_SIGMA_FRACTION: f64 = 0.05;

/// One measured linewidth sample; the abscissa is Ω² as is conventional
/// for power-broadening plots.
#[derive(Debug, Clone, Copy)]
pub struct LinewidthPoint {
    pub omega_sq: f64,
    pub fwhm: f64,
    pub sigma: f64,
}

impl LinewidthPoint {
    pub fn omega(&self) -> f64 {
        self.omega_sq.sqrt()
    }
}

#[derive(Debug, Clone)]
pub struct LinewidthCurve {
    pub points: Vec<LinewidthPoint>,
}

impl LinewidthCurve {
    /// Validates the samples and fills missing uncertainties with 5% of
    /// the linewidth.
    pub fn new(mut points: Vec<LinewidthPoint>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidData("empty linewidth curve".into()));
        }
        for p in &mut points {
            if !(p.omega_sq > 0.0) || !(p.fwhm > 0.0) || !p.sigma.is_finite() {
                return Err(Error::InvalidData(format!(
                    "bad linewidth sample: omega_sq {}, fwhm {}, sigma {}",
                    p.omega_sq, p.fwhm, p.sigma
                )));
            }
            if p.sigma <= 0.0 {
                p.sigma = DEFAULT_SIGMA_FRACTION * p.fwhm;
            }
        }
        Ok(LinewidthCurve { points })
    }

    pub fn omegas(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.omega()).collect()
    }
}

/// Monotone map between drive amplitude J and the Rabi splitting Ω
/// extracted from simulated spectra, linearly interpolated both ways.
#[derive(Debug, Clone)]
pub struct RabiMap {
    j: Vec<f64>,
    omega: Vec<f64>,
}

impl RabiMap {
    /// Simulates the spectrum at each drive value and reads Ω off the
    /// lower-sideband position, the same observable the linewidth curves
    /// use.
    pub fn build(base: &SystemParams, j_values: &[f64], grid: &GridOptions) -> Result<RabiMap> {
        if j_values.len() < 2 {
            return Err(Error::InvalidParams("a Rabi map needs at least two drives".into()));
        }
        if j_values.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParams("drive values must be strictly increasing".into()));
        }
        let mut omega = Vec::with_capacity(j_values.len());
        for &j in j_values {
            let sim = simulate_spectrum(&base.with_drive(j), grid)?;
            let line =
                fit_lower_sideband(&sim.spectrum.omega, &sim.spectrum.values, sim.omega_est)?;
            omega.push(-line.peak.center);
        }
        if omega.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidData(format!(
                "extracted Rabi frequencies are not monotone in drive: {omega:?}"
            )));
        }
        Ok(RabiMap { j: j_values.to_vec(), omega })
    }

    pub fn from_samples(j: Vec<f64>, omega: Vec<f64>) -> Result<RabiMap> {
        if j.len() != omega.len() || j.len() < 2 {
            return Err(Error::InvalidData("map needs matching samples, at least two".into()));
        }
        if j.windows(2).any(|w| w[1] <= w[0]) || omega.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidData("map samples must be strictly increasing".into()));
        }
        Ok(RabiMap { j, omega })
    }

    pub fn omega_range(&self) -> (f64, f64) {
        (self.omega[0], *self.omega.last().unwrap())
    }

    fn interp(xs: &[f64], ys: &[f64], x: f64) -> Result<f64> {
        if x < xs[0] || x > *xs.last().unwrap() {
            return Err(Error::RabiMapRange {
                target: x,
                lo: xs[0],
                hi: *xs.last().unwrap(),
            });
        }
        let k = match xs.binary_search_by(|v| v.total_cmp(&x)) {
            Ok(i) => return Ok(ys[i]),
            Err(i) => i - 1,
        };
        let t = (x - xs[k]) / (xs[k + 1] - xs[k]);
        Ok(ys[k] + t * (ys[k + 1] - ys[k]))
    }

    /// Ω produced by drive J.
    pub fn omega_at(&self, j: f64) -> Result<f64> {
        Self::interp(&self.j, &self.omega, j)
    }

    /// Drive J that produces the target Ω.
    pub fn drive_for(&self, omega: f64) -> Result<f64> {
        Self::interp(&self.omega, &self.j, omega)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct CacheKey {
    ads: u64,
    asp: u64,
    j: u64,
    fock: usize,
}

/// Predicts lower-sideband linewidths for candidate phonon rates by
/// running the full pipeline, memoizing on (rates, drive, truncation) so
/// repeated Gauss-Newton evaluations are free.
pub struct LinewidthPredictor {
    base: SystemParams,
    grid: GridOptions,
    map: RabiMap,
    cache: Mutex<HashMap<CacheKey, f64>>,
}

impl LinewidthPredictor {
    pub fn new(base: SystemParams, grid: GridOptions, map: RabiMap) -> Self {
        LinewidthPredictor { base, grid, map, cache: Mutex::new(HashMap::new()) }
    }

    pub fn rabi_map(&self) -> &RabiMap {
        &self.map
    }

    pub fn cache_len(&self) -> usize {
        self.cache.lock().expect("cache lock").len()
    }

    /// Lower-sideband FWHM at the drive that produces `omega_target`,
    /// with the two phonon rates overridden.
    pub fn lower_fwhm(&self, ads: f64, asp: f64, omega_target: f64) -> Result<f64> {
        let j = self.map.drive_for(omega_target)?;
        let key = CacheKey {
            ads: ads.to_bits(),
            asp: asp.to_bits(),
            j: j.to_bits(),
            fock: self.base.fock_dim,
        };
        if let Some(&w) = self.cache.lock().expect("cache lock").get(&key) {
            return Ok(w);
        }
        let mut p = self.base.with_drive(j);
        p.gamma_ph_ads = ads;
        p.gamma_ph_asp = asp;
        let sim = simulate_spectrum(&p, &self.grid)?;
        let line =
            fit_lower_sideband(&sim.spectrum.omega, &sim.spectrum.values, omega_target)?;
        let w = line.peak.fwhm;
        self.cache.lock().expect("cache lock").insert(key, w);
        Ok(w)
    }

    /// Predictions for every point of a measured curve.
    pub fn predict(&self, ads: f64, asp: f64, curve: &LinewidthCurve) -> Result<Vec<f64>> {
        curve
            .points
            .iter()
            .map(|pt| self.lower_fwhm(ads, asp, pt.omega()))
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct CalibrationOptions {
    pub start: (f64, f64),
    pub max_iterations: usize,
    /// Relative χ² change below which the fit counts as converged.
    pub tolerance: f64,
}

impl Default for CalibrationOptions {
    fn default() -> Self {
        CalibrationOptions { start: (0.2, 0.3), max_iterations: 50, tolerance: 1e-6 }
    }
}

/// One Gauss-Newton iterate, kept for diagnostics.
#[derive(Debug, Clone, Copy)]
pub struct CalibrationStep {
    pub gamma_ph_ads: f64,
    pub gamma_ph_asp: f64,
    pub chi2: f64,
}

#[derive(Debug, Clone)]
pub struct Calibration {
    pub gamma_ph_ads: f64,
    pub gamma_ph_asp: f64,
    pub ads_sigma: f64,
    pub asp_sigma: f64,
    pub chi2: f64,
    pub iterations: usize,
    /// True when a rate was pinned at zero to stay physical.
    pub clamped: bool,
    pub log: Vec<CalibrationStep>,
}

/// Damped Gauss-Newton on weighted residuals r(θ) with θ clamped to the
/// nonnegative quadrant. The residual closure returns one entry per data
/// point; σ weighting is the caller's responsibility.
fn gauss_newton_2d(
    start: [f64; 2],
    opts: &CalibrationOptions,
    residuals: &mut dyn FnMut([f64; 2]) -> Result<Vec<f64>>,
) -> Result<Calibration> {
    if opts.max_iterations == 0 {
        return Err(Error::InvalidParams("max_iterations must be >= 1".into()));
    }
    let chi2_of = |r: &[f64]| r.iter().map(|v| v * v).sum::<f64>();

    let mut theta = [start[0].max(0.0), start[1].max(0.0)];
    let mut r = residuals(theta)?;
    let n = r.len();
    if n < 2 {
        return Err(Error::InvalidData("need at least two residuals".into()));
    }
    let mut chi2 = chi2_of(&r);
    let mut log = vec![CalibrationStep {
        gamma_ph_ads: theta[0],
        gamma_ph_asp: theta[1],
        chi2,
    }];
    let mut converged = false;
    let mut iterations = 0;
    let mut jac = Array2::<f64>::zeros((n, 2));

    for _ in 0..opts.max_iterations {
        iterations += 1;
        // finite-difference Jacobian; forward difference at the boundary
        for k in 0..2 {
            let h = (1e-2 * theta[k].abs()).max(1e-4);
            let mut tp = theta;
            tp[k] += h;
            let rp = residuals(tp)?;
            if theta[k] - h >= 0.0 {
                let mut tm = theta;
                tm[k] -= h;
                let rm = residuals(tm)?;
                for i in 0..n {
                    jac[[i, k]] = (rp[i] - rm[i]) / (2.0 * h);
                }
            } else {
                for i in 0..n {
                    jac[[i, k]] = (rp[i] - r[i]) / h;
                }
            }
        }

        let mut jtj = Array2::<f64>::zeros((2, 2));
        let mut jtr = Array1::<f64>::zeros(2);
        for a in 0..2 {
            for b in 0..2 {
                jtj[[a, b]] = (0..n).map(|i| jac[[i, a]] * jac[[i, b]]).sum();
            }
            jtr[a] = (0..n).map(|i| jac[[i, a]] * r[i]).sum();
        }
        let delta = jtj
            .solve(&jtr)
            .map_err(|_| Error::LinearSolve("singular Gauss-Newton normal matrix".into()))?;

        // backtracking line search with nonnegativity clamp
        let mut scale = 1.0;
        let mut accepted = false;
        for _ in 0..8 {
            let trial = [
                (theta[0] - scale * delta[0]).max(0.0),
                (theta[1] - scale * delta[1]).max(0.0),
            ];
            let rt = residuals(trial)?;
            let c2 = chi2_of(&rt);
            if c2 < chi2 {
                let rel = (chi2 - c2) / chi2.max(1e-300);
                theta = trial;
                r = rt;
                chi2 = c2;
                log.push(CalibrationStep {
                    gamma_ph_ads: theta[0],
                    gamma_ph_asp: theta[1],
                    chi2,
                });
                accepted = true;
                if rel <= opts.tolerance {
                    converged = true;
                }
                break;
            }
            scale /= 2.0;
        }
        if !accepted {
            // no descent left: converged if the gradient is already flat
            let grad = jtr.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
            converged = grad <= 1e-8 * chi2.max(1.0) || chi2 <= 1e-20;
            break;
        }
        if converged {
            break;
        }
    }
    if !converged {
        return Err(Error::CalibrationNonConvergence { iterations, residual: chi2 });
    }

    // covariance from the final Jacobian, scaled by the reduced χ²
    let mut jtj = Array2::<f64>::zeros((2, 2));
    for a in 0..2 {
        for b in 0..2 {
            jtj[[a, b]] = (0..n).map(|i| jac[[i, a]] * jac[[i, b]]).sum();
        }
    }
    let dof = (n as f64 - 2.0).max(1.0);
    let (ads_sigma, asp_sigma) = match jtj.inv() {
        Ok(cov) => {
            let s = (chi2 / dof).max(0.0);
            (
                (cov[[0, 0]] * s).max(0.0).sqrt(),
                (cov[[1, 1]] * s).max(0.0).sqrt(),
            )
        }
        Err(_) => (0.0, 0.0),
    };

    let clamped = theta[0] == 0.0 || theta[1] == 0.0;
    Ok(Calibration {
        gamma_ph_ads: theta[0],
        gamma_ph_asp: theta[1],
        ads_sigma,
        asp_sigma,
        chi2,
        iterations,
        clamped,
        log,
    })
}

/// Fits the two phonon-assisted rates to a measured linewidth curve by
/// weighted Gauss-Newton over full pipeline predictions.
pub fn fit_phonon_rates(
    curve: &LinewidthCurve,
    predictor: &LinewidthPredictor,
    opts: &CalibrationOptions,
) -> Result<Calibration> {
    let mut residuals = |theta: [f64; 2]| -> Result<Vec<f64>> {
        let pred = predictor.predict(theta[0], theta[1], curve)?;
        Ok(pred
            .iter()
            .zip(&curve.points)
            .map(|(p, pt)| (p - pt.fwhm) / pt.sigma)
            .collect())
    };
    gauss_newton_2d([opts.start.0, opts.start.1], opts, &mut residuals)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::DriveTarget;

    fn qubit_base() -> SystemParams {
        SystemParams {
            delta_c: 0.0,
            delta_x: 0.0,
            g: 0.0,
            kappa: 8.0,
            gamma: 0.3,
            gamma_d: 0.1,
            gamma_ph_ads: 0.0,
            gamma_ph_asp: 0.0,
            drive_j: 0.0,
            drive_target: DriveTarget::Qubit,
            fock_dim: 2,
        }
    }

    fn tight_grid() -> GridOptions {
        GridOptions { omega_step: Some(0.05), ..GridOptions::default() }
    }

    #[test]
    fn linewidth_curve_fills_default_sigma() {
        let curve = LinewidthCurve::new(vec![
            LinewidthPoint { omega_sq: 36.0, fwhm: 0.8, sigma: 0.0 },
            LinewidthPoint { omega_sq: 100.0, fwhm: 1.0, sigma: 0.02 },
        ])
        .unwrap();
        assert!((curve.points[0].sigma - 0.04).abs() < 1e-12);
        assert_eq!(curve.points[1].sigma, 0.02);
        assert!((curve.points[0].omega() - 6.0).abs() < 1e-12);
        assert!(LinewidthCurve::new(vec![]).is_err());
        assert!(LinewidthCurve::new(vec![LinewidthPoint {
            omega_sq: -1.0,
            fwhm: 0.5,
            sigma: 0.0
        }])
        .is_err());
    }

    #[test]
    fn rabi_map_interpolates_and_inverts() {
        let map = RabiMap::from_samples(vec![1.0, 2.0, 3.0], vec![4.0, 8.0, 12.0]).unwrap();
        assert!((map.omega_at(1.5).unwrap() - 6.0).abs() < 1e-12);
        assert!((map.drive_for(10.0).unwrap() - 2.5).abs() < 1e-12);
        assert!(matches!(
            map.drive_for(12.5),
            Err(Error::RabiMapRange { .. })
        ));
        assert!(matches!(map.omega_at(0.5), Err(Error::RabiMapRange { .. })));
        let (lo, hi) = map.omega_range();
        assert_eq!((lo, hi), (4.0, 12.0));
        assert!(RabiMap::from_samples(vec![1.0, 1.0], vec![1.0, 2.0]).is_err());
    }

    #[test]
    fn qubit_mode_rabi_map_is_nearly_identity() {
        let map = RabiMap::build(&qubit_base(), &[6.0, 10.0, 14.0], &tight_grid()).unwrap();
        for (j, w) in [(6.0, None), (10.0, None), (12.0, Some(()))] {
            let got = map.omega_at(j).unwrap();
            assert!(
                (got - j).abs() / j < 0.03,
                "drive {j} mapped to Ω {got} ({:?})",
                w
            );
        }
    }

    #[test]
    fn gauss_newton_solves_linear_least_squares() {
        let xs = [1.0, 2.0, 3.0, 4.0, 5.0];
        let data: Vec<f64> = xs.iter().map(|x| 0.8 * x + 0.25 * x * x).collect();
        let mut resid = |t: [f64; 2]| -> Result<Vec<f64>> {
            Ok(xs
                .iter()
                .zip(&data)
                .map(|(x, d)| t[0] * x + t[1] * x * x - d)
                .collect())
        };
        let cal = gauss_newton_2d([0.2, 0.3], &CalibrationOptions::default(), &mut resid).unwrap();
        assert!((cal.gamma_ph_ads - 0.8).abs() < 1e-8);
        assert!((cal.gamma_ph_asp - 0.25).abs() < 1e-8);
        assert!(!cal.clamped);
        assert!(cal.chi2 < 1e-16);
        assert!(cal.log.len() >= 2);
    }

    #[test]
    fn negative_optimum_is_clamped_to_zero() {
        // unconstrained optimum has θ0 < 0
        let xs = [1.0, 2.0, 3.0, 4.0, 5.0];
        let data: Vec<f64> = xs.iter().map(|x| -0.2 * x + 0.3 * x * x).collect();
        let mut resid = |t: [f64; 2]| -> Result<Vec<f64>> {
            Ok(xs
                .iter()
                .zip(&data)
                .map(|(x, d)| t[0] * x + t[1] * x * x - d)
                .collect())
        };
        let cal = gauss_newton_2d([0.2, 0.3], &CalibrationOptions::default(), &mut resid).unwrap();
        assert!(cal.clamped);
        assert_eq!(cal.gamma_ph_ads, 0.0);
        assert!(cal.gamma_ph_asp > 0.25);
    }

    #[test]
    fn exhausted_iterations_report_nonconvergence() {
        // curved Rosenbrock-style valley needs more than two iterations
        let mut resid = |t: [f64; 2]| -> Result<Vec<f64>> {
            Ok(vec![10.0 * (t[1] - t[0] * t[0]), 1.0 - t[0]])
        };
        let opts = CalibrationOptions { max_iterations: 2, tolerance: 1e-14, ..Default::default() };
        let err = gauss_newton_2d([0.2, 0.3], &opts, &mut resid).unwrap_err();
        assert!(matches!(err, Error::CalibrationNonConvergence { iterations: 2, .. }));
    }

    #[test]
    fn recovers_phonon_rates_from_synthetic_curve() {
        let base = qubit_base();
        let grid = tight_grid();
        let map = RabiMap::from_samples(vec![4.0, 16.0], vec![4.0, 16.0]).unwrap();
        let predictor = LinewidthPredictor::new(base, grid, map);

        let truth = (0.05, 0.12);
        let targets = [6.0_f64, 9.0, 12.0];
        let points: Vec<LinewidthPoint> = targets
            .iter()
            .map(|&w| {
                let fwhm = predictor.lower_fwhm(truth.0, truth.1, w).unwrap();
                LinewidthPoint { omega_sq: w * w, fwhm, sigma: 0.0 }
            })
            .collect();
        let curve = LinewidthCurve::new(points).unwrap();

        let cal = fit_phonon_rates(&curve, &predictor, &CalibrationOptions::default()).unwrap();
        assert!(
            (cal.gamma_ph_ads - truth.0).abs() < 5e-3,
            "ads {} vs {}",
            cal.gamma_ph_ads,
            truth.0
        );
        assert!(
            (cal.gamma_ph_asp - truth.1).abs() < 5e-3,
            "asp {} vs {}",
            cal.gamma_ph_asp,
            truth.1
        );
        assert!(!cal.clamped);
        assert!(cal.ads_sigma >= 0.0 && cal.asp_sigma >= 0.0);
    }

    #[test]
    fn predictor_memoizes_repeated_evaluations() {
        let predictor = LinewidthPredictor::new(
            qubit_base(),
            tight_grid(),
            RabiMap::from_samples(vec![4.0, 16.0], vec![4.0, 16.0]).unwrap(),
        );
        let a = predictor.lower_fwhm(0.02, 0.04, 8.0).unwrap();
        assert_eq!(predictor.cache_len(), 1);
        let b = predictor.lower_fwhm(0.02, 0.04, 8.0).unwrap();
        assert_eq!(predictor.cache_len(), 1);
        assert_eq!(a, b);
    }
}
