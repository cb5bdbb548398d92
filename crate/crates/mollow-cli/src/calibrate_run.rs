//! The calibrate entry point: import a measured linewidth curve, build the
//! drive inversion table, fit the two phonon rates, persist the result.

use crate::config::{ParamsConfig, RunConfig};
use crate::error::{CliError, CliResult};
use crate::records::{self, ImportedCurve};
use crate::sweep::GridMeta;
use mollow::calibrate::{
    fit_phonon_rates, CalibrationOptions, LinewidthCurve, LinewidthPoint, LinewidthPredictor,
    RabiMap,
};
use mollow::pipeline::rabi_estimate;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CalibrationStepOut {
    pub gamma_ph_ads: f64,
    pub gamma_ph_asp: f64,
    pub chi2: f64,
}

/// Written as calibration.json next to the predicted curve.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub schema: String,
    pub version: u32,
    pub tool_version: String,
    pub gamma_ph_ads: f64,
    pub ads_sigma: f64,
    pub gamma_ph_asp: f64,
    pub asp_sigma: f64,
    pub chi2: f64,
    pub iterations: usize,
    pub clamped: bool,
    /// The imported file carried no usable uncertainties, so the 5% default
    /// was injected.
    pub sigma_defaulted: bool,
    pub params: ParamsConfig,
    pub grid: GridMeta,
    pub log: Vec<CalibrationStepOut>,
}

pub struct CalibrationArtifacts {
    pub report: CalibrationReport,
    pub report_path: PathBuf,
    pub predicted_path: PathBuf,
}

/// Runs a calibration against an imported curve. The drive map brackets the
/// curve's Rabi range with a 25% margin so every point inverts by
/// interpolation.
pub fn run_calibration(
    config: &RunConfig,
    data_path: &Path,
    out_dir: &Path,
) -> CliResult<CalibrationArtifacts> {
    let text = std::fs::read_to_string(data_path)
        .map_err(|e| CliError::Io(format!("{}: {e}", data_path.display())))?;
    let ImportedCurve { curve, sigma_defaulted } = records::import_linewidth_curve(&text)?;

    let base = config.params.to_system()?;
    let grid = config.grid_options();
    let omegas = curve.omegas();
    let lo = omegas.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = omegas.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let slope = rabi_estimate(&base.with_drive(1.0));
    if !(slope > 0.0) {
        return Err(CliError::Config(
            "calibration needs a driven system with a nonzero response slope".into(),
        ));
    }
    let j_lo = 0.75 * lo / slope;
    let j_hi = 1.25 * hi / slope;
    let map = RabiMap::build(&base, &[j_lo, 0.5 * (j_lo + j_hi), j_hi], &grid)
        .map_err(|e| CliError::Numerical(format!("Rabi map: {e}")))?;
    let predictor = LinewidthPredictor::new(base, grid.clone(), map);

    let cal = fit_phonon_rates(&curve, &predictor, &CalibrationOptions::default())
        .map_err(|e| CliError::Numerical(e.to_string()))?;

    let predicted: Vec<LinewidthPoint> = curve
        .points
        .iter()
        .map(|pt| {
            let fwhm = predictor
                .lower_fwhm(cal.gamma_ph_ads, cal.gamma_ph_asp, pt.omega())
                .map_err(|e| CliError::Numerical(e.to_string()))?;
            Ok(LinewidthPoint { omega_sq: pt.omega_sq, fwhm, sigma: pt.sigma })
        })
        .collect::<CliResult<_>>()?;
    let predicted_curve =
        LinewidthCurve::new(predicted).map_err(|e| CliError::Numerical(e.to_string()))?;

    let report = CalibrationReport {
        schema: "calibration".into(),
        version: 1,
        tool_version: env!("CARGO_PKG_VERSION").into(),
        gamma_ph_ads: cal.gamma_ph_ads,
        ads_sigma: cal.ads_sigma,
        gamma_ph_asp: cal.gamma_ph_asp,
        asp_sigma: cal.asp_sigma,
        chi2: cal.chi2,
        iterations: cal.iterations,
        clamped: cal.clamped,
        sigma_defaulted,
        params: config.params.clone(),
        grid: GridMeta {
            t_max: grid.t_max,
            omega_min: grid.omega_min,
            omega_max: grid.omega_max,
            omega_step: grid.omega_step,
            oversample: grid.oversample,
            max_tail_doublings: grid.max_tail_doublings,
        },
        log: cal
            .log
            .iter()
            .map(|s| CalibrationStepOut {
                gamma_ph_ads: s.gamma_ph_ads,
                gamma_ph_asp: s.gamma_ph_asp,
                chi2: s.chi2,
            })
            .collect(),
    };

    std::fs::create_dir_all(out_dir)
        .map_err(|e| CliError::Io(format!("{}: {e}", out_dir.display())))?;
    let report_path = out_dir.join("calibration.json");
    std::fs::write(&report_path, serde_json::to_string_pretty(&report).expect("serializable"))
        .map_err(|e| CliError::Io(format!("{}: {e}", report_path.display())))?;
    let predicted_path = out_dir.join("predicted_curve.csv");
    std::fs::write(&predicted_path, records::curve_to_csv(&predicted_curve))
        .map_err(|e| CliError::Io(format!("{}: {e}", predicted_path.display())))?;

    Ok(CalibrationArtifacts { report, report_path, predicted_path })
}
