//! Stored figure recipes: device parameters and sweep ranges for each
//! reproduction run.
//!
//! Phonon rates are detuning-specific (0.19/0.28 GHz at 42 GHz detuning,
//! 0.17/0.37 GHz at 85 GHz). Sweeps are laid out in drive amplitude, with
//! the J values derived from the analytic small-signal slope so each preset
//! covers a stated Rabi-frequency span; the realized Rabi frequency is
//! whatever the fits extract, recorded per row.

use crate::config::{AxisKind, DriveKind, GridConfig, ParamsConfig, Protocol, RunConfig, SweepSpec};
use crate::error::{CliError, CliResult};
use mollow::pipeline::rabi_estimate;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Figure {
    Fig2b,
    Fig2d,
    Fig3b,
    Fig3c,
    Fig4a,
    Fig4b,
}

impl Figure {
    pub fn parse(s: &str) -> CliResult<Figure> {
        match s {
            "fig2b" => Ok(Figure::Fig2b),
            "fig2d" => Ok(Figure::Fig2d),
            "fig3b" => Ok(Figure::Fig3b),
            "fig3c" => Ok(Figure::Fig3c),
            "fig4a" => Ok(Figure::Fig4a),
            "fig4b" => Ok(Figure::Fig4b),
            other => Err(CliError::Config(format!(
                "unknown figure {other:?}; expected one of fig2b, fig2d, fig3b, fig3c, fig4a, fig4b"
            ))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Figure::Fig2b => "fig2b",
            Figure::Fig2d => "fig2d",
            Figure::Fig3b => "fig3b",
            Figure::Fig3c => "fig3c",
            Figure::Fig4a => "fig4a",
            Figure::Fig4b => "fig4b",
        }
    }
}

/// Device parameters at the two detunings the measurements were taken at.
fn device_params(delta_cx: f64) -> ParamsConfig {
    let (ads, asp) = if delta_cx < 60.0 { (0.19, 0.28) } else { (0.17, 0.37) };
    ParamsConfig {
        delta_c: delta_cx,
        delta_x: 0.0,
        g: 15.3,
        kappa: 36.0,
        gamma: 0.16,
        gamma_d: 1.0,
        gamma_ph_ads: ads,
        gamma_ph_asp: asp,
        drive_j: 0.0,
        drive_target: DriveKind::Cavity,
        fock_dim: 16,
    }
}

/// Drive list covering the Rabi span [lo, hi] GHz in `n` even steps, using
/// the analytic response slope.
fn drive_span(params: &ParamsConfig, lo: f64, hi: f64, n: usize) -> CliResult<Vec<f64>> {
    let base = params.to_system()?;
    let slope = rabi_estimate(&base.with_drive(1.0));
    let step = (hi - lo) / (n - 1) as f64;
    Ok((0..n).map(|k| (lo + step * k as f64) / slope).collect())
}

fn sweep_values(values: Vec<f64>) -> SweepSpec {
    SweepSpec {
        axis: AxisKind::Drive,
        values: Some(values),
        start: None,
        stop: None,
        points: None,
    }
}

/// Grid used by the intensity and linewidth sweeps: coarse enough to keep a
/// 13-point sweep at minutes scale, fine enough for the several-GHz
/// sideband widths.
fn sweep_grid() -> GridConfig {
    GridConfig {
        t_max: Some(3.4),
        omega_min: None,
        omega_max: None,
        omega_step: Some(0.15),
    }
}

/// Ablation runs include a no-dephasing variant with sub-GHz structure at
/// weak drive, so they resolve finer and integrate longer.
fn ablation_grid() -> GridConfig {
    GridConfig {
        t_max: Some(5.1),
        omega_min: None,
        omega_max: None,
        omega_step: Some(0.1),
    }
}

pub fn preset(fig: Figure) -> CliResult<RunConfig> {
    let (protocol, delta_cx, rabi_span, n_points, grid) = match fig {
        Figure::Fig2b => (Protocol::IntensitySweep, 42.0, (10.0, 70.0), 13, sweep_grid()),
        Figure::Fig2d => (Protocol::IntensitySweep, 85.0, (10.0, 70.0), 13, sweep_grid()),
        Figure::Fig3b => (Protocol::LinewidthSweep, 42.0, (15.0, 70.0), 12, sweep_grid()),
        Figure::Fig3c => (Protocol::LinewidthSweep, 85.0, (15.0, 70.0), 12, sweep_grid()),
        Figure::Fig4a => (Protocol::Ablation, 42.0, (10.0, 70.0), 13, ablation_grid()),
        Figure::Fig4b => (Protocol::Ablation, 85.0, (10.0, 70.0), 13, ablation_grid()),
    };
    let params = device_params(delta_cx);
    let drives = drive_span(&params, rabi_span.0, rabi_span.1, n_points)?;
    Ok(RunConfig {
        protocol,
        output_dir: None,
        seed: None,
        params,
        sweep: sweep_values(drives),
        grid: Some(grid),
    })
}
