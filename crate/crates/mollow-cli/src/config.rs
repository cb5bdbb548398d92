//! Run configuration: a TOML file mapping onto [`RunConfig`].
//!
//! Every `[params]` field is an ordinary frequency in GHz except `drive_j`
//! (GHz^(1/2) in cavity mode) and the dimensionless `fock_dim`. Unknown keys
//! anywhere in the file are errors so that a typo cannot silently fall back
//! to a default.

use crate::error::{CliError, CliResult};
use mollow::pipeline::GridOptions;
use mollow::{DriveTarget, SystemParams};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Protocol {
    Spectrum,
    LinewidthSweep,
    IntensitySweep,
    Ablation,
    Calibrate,
}

impl Protocol {
    pub fn name(self) -> &'static str {
        match self {
            Protocol::Spectrum => "spectrum",
            Protocol::LinewidthSweep => "linewidth_sweep",
            Protocol::IntensitySweep => "intensity_sweep",
            Protocol::Ablation => "ablation",
            Protocol::Calibrate => "calibrate",
        }
    }
}

/// Mirror of [`SystemParams`] with serde derives, so the core crate stays
/// free of serialization concerns.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsConfig {
    pub delta_c: f64,
    pub delta_x: f64,
    pub g: f64,
    pub kappa: f64,
    pub gamma: f64,
    pub gamma_d: f64,
    pub gamma_ph_ads: f64,
    pub gamma_ph_asp: f64,
    pub drive_j: f64,
    pub drive_target: DriveKind,
    pub fock_dim: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DriveKind {
    Cavity,
    Qubit,
}

impl ParamsConfig {
    pub fn to_system(&self) -> CliResult<SystemParams> {
        let p = SystemParams {
            delta_c: self.delta_c,
            delta_x: self.delta_x,
            g: self.g,
            kappa: self.kappa,
            gamma: self.gamma,
            gamma_d: self.gamma_d,
            gamma_ph_ads: self.gamma_ph_ads,
            gamma_ph_asp: self.gamma_ph_asp,
            drive_j: self.drive_j,
            drive_target: match self.drive_target {
                DriveKind::Cavity => DriveTarget::Cavity,
                DriveKind::Qubit => DriveTarget::Qubit,
            },
            fock_dim: self.fock_dim,
        };
        p.validate().map_err(|e| CliError::Config(e.to_string()))?;
        Ok(p)
    }

    pub fn from_system(p: &SystemParams) -> Self {
        ParamsConfig {
            delta_c: p.delta_c,
            delta_x: p.delta_x,
            g: p.g,
            kappa: p.kappa,
            gamma: p.gamma,
            gamma_d: p.gamma_d,
            gamma_ph_ads: p.gamma_ph_ads,
            gamma_ph_asp: p.gamma_ph_asp,
            drive_j: p.drive_j,
            drive_target: match p.drive_target {
                DriveTarget::Cavity => DriveKind::Cavity,
                DriveTarget::Qubit => DriveKind::Qubit,
            },
            fock_dim: p.fock_dim,
        }
    }
}

/// The sweep axis: explicit drive amplitudes, explicit Rabi-frequency
/// targets, or an inclusive evenly spaced range of either.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub axis: AxisKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stop: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AxisKind {
    /// Values are drive amplitudes J.
    Drive,
    /// Values are target Rabi frequencies; each is mapped to a J by
    /// inverting a simulated Omega(J) table before the sweep runs.
    Rabi,
}

impl SweepSpec {
    /// The axis values in sweep order. Exactly one of `values` and the
    /// `start`/`stop`/`points` triple must be present.
    pub fn resolve(&self) -> CliResult<Vec<f64>> {
        let listed = self.values.is_some();
        let ranged = self.start.is_some() || self.stop.is_some() || self.points.is_some();
        if listed && ranged {
            return Err(CliError::Config(
                "sweep gives both explicit values and a range; pick one".into(),
            ));
        }
        let vals = if let Some(v) = &self.values {
            v.clone()
        } else {
            let (start, stop, points) = match (self.start, self.stop, self.points) {
                (Some(a), Some(b), Some(n)) => (a, b, n),
                _ => {
                    return Err(CliError::Config(
                        "sweep range needs all of start, stop, points".into(),
                    ))
                }
            };
            if points < 2 {
                return Err(CliError::Config("sweep range needs points >= 2".into()));
            }
            let step = (stop - start) / (points - 1) as f64;
            (0..points).map(|i| start + step * i as f64).collect()
        };
        if vals.is_empty() {
            return Err(CliError::Config("sweep axis is empty".into()));
        }
        if vals.iter().any(|v| !v.is_finite()) {
            return Err(CliError::Config("sweep axis contains a non-finite value".into()));
        }
        if self.axis == AxisKind::Rabi && vals.iter().any(|&v| v <= 0.0) {
            return Err(CliError::Config("Rabi targets must be positive".into()));
        }
        Ok(vals)
    }
}

/// Optional overrides of the automatic correlation/frequency grid.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_step: Option<f64>,
}

impl GridConfig {
    pub fn to_options(&self) -> GridOptions {
        GridOptions {
            t_max: self.t_max,
            omega_min: self.omega_min,
            omega_max: self.omega_max,
            omega_step: self.omega_step,
            ..GridOptions::default()
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub protocol: Protocol,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    /// Noise-injection seed, recorded in metadata; the deterministic sweep
    /// protocols ignore it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub params: ParamsConfig,
    pub sweep: SweepSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridConfig>,
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> CliResult<RunConfig> {
        let cfg: RunConfig =
            toml::from_str(text).map_err(|e| CliError::Config(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> CliResult<RunConfig> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        RunConfig::from_toml_str(&text)
    }

    pub fn validate(&self) -> CliResult<()> {
        self.params.to_system()?;
        self.sweep.resolve()?;
        if let Some(g) = &self.grid {
            for (name, v) in [
                ("t_max", g.t_max),
                ("omega_step", g.omega_step),
            ] {
                if let Some(v) = v {
                    if !v.is_finite() || v <= 0.0 {
                        return Err(CliError::Config(format!("grid.{name} = {v} must be > 0")));
                    }
                }
            }
            if let (Some(lo), Some(hi)) = (g.omega_min, g.omega_max) {
                if !(lo < hi) {
                    return Err(CliError::Config(format!(
                        "grid.omega_min = {lo} must be below omega_max = {hi}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn grid_options(&self) -> GridOptions {
        self.grid.as_ref().map(GridConfig::to_options).unwrap_or_default()
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("RunConfig serializes")
    }
}
