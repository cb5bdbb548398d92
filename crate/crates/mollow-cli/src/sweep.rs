//! Sweep execution: one simulated spectrum and two fits per axis point,
//! a second pass that freezes the cavity component near the sideband
//! crossing, and artifact persistence.
//!
//! Points run in a rayon pool; results are collected in axis order and a
//! single writer emits each file, so reruns are byte-identical regardless
//! of completion order.

use crate::config::{AxisKind, ParamsConfig, Protocol, RunConfig};
use crate::error::{CliError, CliResult};
use crate::plot;
use crate::records::{self, PointError, SweepRow};
use mollow::analysis::{
    fit_cavity_emission, fit_lower_sideband, sideband_pair, CavityEmissionFit, CavityTreatment,
    CAVITY_FREEZE_MARGIN,
};
use mollow::calibrate::RabiMap;
use mollow::lorentz::{fit_auto, FitOptions, LorentzianPeak};
use mollow::pipeline::{converge_fock, simulate_spectrum, GridOptions, SimulatedSpectrum};
use mollow::{DriveTarget, SystemParams};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FockMode {
    /// Simulate at exactly this truncation.
    Fixed(usize),
    /// Double the configured truncation until the lower-sideband linewidth
    /// is stable to 0.5%.
    Auto,
}

/// A fully resolved run: what to simulate, where to write.
#[derive(Debug, Clone)]
pub struct RunPlan {
    pub protocol: Protocol,
    pub base: SystemParams,
    pub axis_kind: AxisKind,
    /// Axis values as configured (Rabi targets when axis_kind is Rabi).
    pub axis_input: Vec<f64>,
    /// Drive amplitude per sweep point, after any Rabi-target inversion.
    pub drives: Vec<f64>,
    pub grid: GridOptions,
    pub fock: FockMode,
    pub workers: usize,
    pub seed: Option<u64>,
    pub out_dir: PathBuf,
    pub plot: bool,
}

impl RunPlan {
    /// Resolves a config against CLI overrides. A `Rabi` axis simulates a
    /// small drive ladder up front to build the Omega(J) inversion table.
    pub fn resolve(
        config: &RunConfig,
        out_dir: PathBuf,
        fock: Option<FockMode>,
        workers: usize,
        plot: bool,
    ) -> CliResult<RunPlan> {
        let base = config.params.to_system()?;
        let axis_input = config.sweep.resolve()?;
        let grid = config.grid_options();
        let fock = fock.unwrap_or(FockMode::Fixed(base.fock_dim));
        let drives = match config.sweep.axis {
            AxisKind::Drive => {
                if axis_input.iter().any(|&j| j < 0.0) {
                    return Err(CliError::Config("drive values must be >= 0".into()));
                }
                axis_input.clone()
            }
            AxisKind::Rabi => {
                let map = rabi_map_for_targets(&base, &axis_input, &grid)?;
                axis_input
                    .iter()
                    .map(|&t| map.drive_for(t).map_err(|e| CliError::Numerical(e.to_string())))
                    .collect::<CliResult<Vec<f64>>>()?
            }
        };
        Ok(RunPlan {
            protocol: config.protocol,
            base,
            axis_kind: config.sweep.axis,
            axis_input,
            drives,
            grid,
            fock,
            workers: workers.max(1),
            seed: config.seed,
            out_dir,
            plot,
        })
    }
}

/// Builds the Omega(J) table from three bracketing simulations, using the
/// analytic small-signal slope to pick the drive ladder.
fn rabi_map_for_targets(
    base: &SystemParams,
    targets: &[f64],
    grid: &GridOptions,
) -> CliResult<RabiMap> {
    let lo = targets.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = targets.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let slope = mollow::pipeline::rabi_estimate(&base.with_drive(1.0));
    if !(slope > 0.0) {
        return Err(CliError::Config(
            "Rabi targeting needs a driven system with a nonzero response slope".into(),
        ));
    }
    // 25% margin keeps the extreme targets interpolated, not extrapolated
    let j_lo = 0.75 * lo / slope;
    let j_hi = 1.25 * hi / slope;
    let j_mid = 0.5 * (j_lo + j_hi);
    RabiMap::build(base, &[j_lo, j_mid, j_hi], grid)
        .map_err(|e| CliError::Numerical(format!("Rabi map: {e}")))
}

/// Per-point diagnostics stored in the metadata file. `held_cavity` records
/// the interpolated component of a second-pass fit so the row stays
/// independently recomputable.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PointDiag {
    pub j: f64,
    pub n_fock: usize,
    pub mean_photon: Option<f64>,
    pub top_fock_population: Option<f64>,
    pub tail_resolved: Option<bool>,
    pub cavity_pinned: bool,
    pub cavity_held: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub held_cavity: Option<HeldCavity>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct HeldCavity {
    pub center: f64,
    pub fwhm: f64,
    pub area: f64,
}

struct PointEval {
    row: SweepRow,
    diag: PointDiag,
    /// Upper-sideband center from the first-pass global fit.
    hi_center: Option<f64>,
    /// First-pass cavity component, for neighbor interpolation.
    cavity: Option<HeldCavity>,
    sim: Option<SimulatedSpectrum>,
}

fn failed_point(j: f64, n_fock: usize, stage: PointError, detail: String) -> PointEval {
    PointEval {
        row: SweepRow {
            j,
            omega: None,
            lower_fwhm: None,
            upper_fwhm: None,
            area_low: None,
            area_high: None,
            cavity_area: None,
            n_fock,
            windowed_converged: false,
            global_converged: false,
            error: Some(stage),
        },
        diag: PointDiag {
            j,
            n_fock,
            mean_photon: None,
            top_fock_population: None,
            tail_resolved: None,
            cavity_pinned: false,
            cavity_held: false,
            held_cavity: None,
            error: Some(detail),
        },
        hi_center: None,
        cavity: None,
        sim: None,
    }
}

/// The global fit behind the non-linewidth row fields: four components in
/// cavity mode, a plain triplet in the validation (qubit drive) mode where
/// no cavity line exists.
fn global_fit(
    p: &SystemParams,
    sim: &SimulatedSpectrum,
    treatment: &CavityTreatment,
) -> mollow::Result<(CavityEmissionFit, Option<f64>)> {
    let w = sim.spectrum.omega.as_slice();
    let v = sim.spectrum.values.as_slice();
    match p.drive_target {
        DriveTarget::Cavity => {
            let fit = fit_cavity_emission(
                w,
                v,
                p.delta_cx(),
                p.kappa,
                treatment,
                Some(sim.omega_est),
            )?;
            let cavity_area = fit.cavity.area;
            Ok((fit, Some(cavity_area)))
        }
        DriveTarget::Qubit => {
            let fit = fit_auto(w, v, 3, &FitOptions::default())?;
            Ok((
                CavityEmissionFit {
                    fit,
                    cavity: mollow::lorentz::FittedPeak {
                        center: 0.0,
                        fwhm: 0.0,
                        area: 0.0,
                        center_sigma: 0.0,
                        fwhm_sigma: 0.0,
                        area_sigma: 0.0,
                        fixed: true,
                    },
                    cavity_held: false,
                    cavity_pinned: false,
                },
                None,
            ))
        }
    }
}

fn eval_point(base: &SystemParams, j: f64, grid: &GridOptions, fock: FockMode) -> PointEval {
    let p = base.with_drive(j);
    let (sim, n_used) = match fock {
        FockMode::Fixed(n) => match simulate_spectrum(&p.with_fock_dim(n), grid) {
            Ok(s) => (s, n),
            Err(e) => return failed_point(j, n, PointError::Simulation, e.to_string()),
        },
        FockMode::Auto => {
            let out = converge_fock(&p, grid, |s| {
                let w = s.spectrum.omega.as_slice();
                let v = s.spectrum.values.as_slice();
                Ok(fit_lower_sideband(w, v, s.omega_est)?.peak.fwhm)
            });
            match out {
                Ok(pair) => pair,
                Err(e) => {
                    return failed_point(j, p.fock_dim, PointError::Simulation, e.to_string())
                }
            }
        }
    };

    let w = sim.spectrum.omega.as_slice();
    let v = sim.spectrum.values.as_slice();
    let windowed = fit_lower_sideband(w, v, sim.omega_est);
    let global = global_fit(&p, &sim, &CavityTreatment::Float);

    let mut row = SweepRow {
        j,
        omega: None,
        lower_fwhm: None,
        upper_fwhm: None,
        area_low: None,
        area_high: None,
        cavity_area: None,
        n_fock: n_used,
        windowed_converged: false,
        global_converged: false,
        error: None,
    };
    let mut diag = PointDiag {
        j,
        n_fock: n_used,
        mean_photon: Some(sim.mean_photon_number()),
        top_fock_population: Some(sim.top_fock_population()),
        tail_resolved: Some(sim.tail_resolved()),
        cavity_pinned: false,
        cavity_held: false,
        held_cavity: None,
        error: None,
    };
    let mut hi_center = None;
    let mut cavity = None;

    match &windowed {
        Ok(line) => {
            row.omega = Some(-line.peak.center);
            row.lower_fwhm = Some(line.peak.fwhm);
            row.windowed_converged = line.converged;
        }
        Err(e) => {
            row.error = Some(PointError::WindowedFit);
            diag.error = Some(format!("windowed fit: {e}"));
        }
    }
    match &global {
        Ok((fit, cavity_area)) => {
            row.global_converged = fit.fit.converged;
            row.cavity_area = *cavity_area;
            diag.cavity_pinned = fit.cavity_pinned;
            if cavity_area.is_some() {
                cavity = Some(HeldCavity {
                    center: fit.cavity.center,
                    fwhm: fit.cavity.fwhm,
                    area: fit.cavity.area,
                });
            }
            match sideband_pair(&fit.fit) {
                Ok((lo, hi)) => {
                    row.upper_fwhm = Some(hi.fwhm);
                    row.area_low = Some(lo.area);
                    row.area_high = Some(hi.area);
                    hi_center = Some(hi.center);
                }
                Err(e) => {
                    if row.error.is_none() {
                        row.error = Some(PointError::GlobalFit);
                        diag.error = Some(format!("global fit: {e}"));
                    }
                }
            }
        }
        Err(e) => {
            if row.error.is_none() {
                row.error = Some(PointError::GlobalFit);
                diag.error = Some(format!("global fit: {e}"));
            }
        }
    }

    PointEval { row, diag, hi_center, cavity, sim: Some(sim) }
}

/// Sweep points whose upper sideband runs within this margin of the cavity
/// cannot separate the two lines; their cavity component is frozen at
/// values interpolated from the neighboring out-of-window points.
fn in_crossing_window(hi_center: Option<f64>, delta_cx: f64) -> bool {
    matches!(hi_center, Some(c) if (c - delta_cx).abs() < CAVITY_FREEZE_MARGIN)
}

/// Linear interpolation of the held cavity component from the nearest
/// out-of-window neighbors on each side, by drive amplitude.
fn interpolated_cavity(evals: &[PointEval], i: usize, delta_cx: f64) -> Option<HeldCavity> {
    let usable = |e: &PointEval| -> Option<(f64, HeldCavity)> {
        if in_crossing_window(e.hi_center, delta_cx) {
            return None;
        }
        e.cavity.map(|c| (e.row.j, c))
    };
    let left = evals[..i].iter().rev().find_map(usable);
    let right = evals[i + 1..].iter().find_map(usable);
    match (left, right) {
        (Some((j0, a)), Some((j1, b))) if j1 > j0 => {
            let t = (evals[i].row.j - j0) / (j1 - j0);
            Some(HeldCavity {
                center: a.center + t * (b.center - a.center),
                fwhm: a.fwhm + t * (b.fwhm - a.fwhm),
                area: a.area + t * (b.area - a.area),
            })
        }
        (Some((_, a)), _) => Some(a),
        (_, Some((_, b))) => Some(b),
        (None, None) => None,
    }
}

/// Re-fits the crossing-window points with the cavity held, updating the
/// global-fit row fields in place.
fn freeze_crossing_window(evals: &mut [PointEval], base: &SystemParams) {
    if base.drive_target != DriveTarget::Cavity {
        return;
    }
    let delta_cx = base.delta_cx();
    let in_window: Vec<usize> = (0..evals.len())
        .filter(|&i| in_crossing_window(evals[i].hi_center, delta_cx))
        .collect();
    for i in in_window {
        let Some(held) = interpolated_cavity(evals, i, delta_cx) else {
            continue;
        };
        let Some(sim) = evals[i].sim.as_ref() else { continue };
        let p = base.with_drive(evals[i].row.j);
        let treatment = CavityTreatment::Hold(LorentzianPeak {
            center: held.center,
            fwhm: held.fwhm,
            area: held.area,
        });
        match global_fit(&p, sim, &treatment) {
            Ok((fit, cavity_area)) => match sideband_pair(&fit.fit) {
                Ok((lo, hi)) => {
                    let e = &mut evals[i];
                    e.row.upper_fwhm = Some(hi.fwhm);
                    e.row.area_low = Some(lo.area);
                    e.row.area_high = Some(hi.area);
                    e.row.cavity_area = cavity_area;
                    e.row.global_converged = fit.fit.converged;
                    if matches!(e.row.error, Some(PointError::GlobalFit)) {
                        e.row.error = None;
                        e.diag.error = None;
                    }
                    e.diag.cavity_pinned = false;
                    e.diag.cavity_held = true;
                    e.diag.held_cavity = Some(held);
                }
                Err(err) => {
                    let e = &mut evals[i];
                    if e.row.error.is_none() {
                        e.row.error = Some(PointError::GlobalFit);
                        e.diag.error = Some(format!("held-cavity fit: {err}"));
                    }
                }
            },
            Err(err) => {
                let e = &mut evals[i];
                if e.row.error.is_none() {
                    e.row.error = Some(PointError::GlobalFit);
                    e.diag.error = Some(format!("held-cavity fit: {err}"));
                }
            }
        }
    }
}

fn run_points(plan: &RunPlan, base: &SystemParams) -> CliResult<Vec<PointEval>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(plan.workers)
        .build()
        .map_err(|e| CliError::Numerical(format!("worker pool: {e}")))?;
    let mut evals: Vec<PointEval> = pool.install(|| {
        use rayon::prelude::*;
        plan.drives
            .par_iter()
            .map(|&j| eval_point(base, j, &plan.grid, plan.fock))
            .collect()
    });
    freeze_crossing_window(&mut evals, base);
    Ok(evals)
}

/// The three ablation variants of a parameter set, in plot stacking order.
pub fn ablation_variants(p: &SystemParams) -> [(&'static str, SystemParams); 3] {
    let mut jc = p.clone();
    jc.gamma_d = 0.0;
    jc.gamma_ph_ads = 0.0;
    jc.gamma_ph_asp = 0.0;
    let mut dephasing = p.clone();
    dephasing.gamma_ph_ads = 0.0;
    dephasing.gamma_ph_asp = 0.0;
    [("jc", jc), ("dephasing", dephasing), ("full", p.clone())]
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridMeta {
    pub t_max: Option<f64>,
    pub omega_min: Option<f64>,
    pub omega_max: Option<f64>,
    pub omega_step: Option<f64>,
    pub oversample: f64,
    pub max_tail_doublings: u32,
}

impl GridMeta {
    fn from_options(g: &GridOptions) -> Self {
        GridMeta {
            t_max: g.t_max,
            omega_min: g.omega_min,
            omega_max: g.omega_max,
            omega_step: g.omega_step,
            oversample: g.oversample,
            max_tail_doublings: g.max_tail_doublings,
        }
    }

    pub fn to_options(&self) -> GridOptions {
        GridOptions {
            t_max: self.t_max,
            omega_min: self.omega_min,
            omega_max: self.omega_max,
            omega_step: self.omega_step,
            oversample: self.oversample,
            max_tail_doublings: self.max_tail_doublings,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VariantMeta {
    /// Ablation variant name; None for single-model sweeps.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variant: Option<String>,
    pub file: String,
    pub params: ParamsConfig,
    pub points: Vec<PointDiag>,
}

/// Everything needed to recompute any row of any emitted CSV.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunMetadata {
    pub schema: String,
    pub version: u32,
    pub tool_version: String,
    pub protocol: Protocol,
    pub axis_kind: AxisKind,
    pub axis_input: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub workers: usize,
    pub fock_auto: bool,
    pub grid: GridMeta,
    pub runs: Vec<VariantMeta>,
}

/// Paths written by a run.
#[derive(Debug, Clone)]
pub struct Artifacts {
    pub csv: Vec<PathBuf>,
    pub metadata: PathBuf,
    pub plots: Vec<PathBuf>,
}

fn write_file(path: &Path, contents: &str) -> CliResult<()> {
    std::fs::write(path, contents)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn fraction_failed(rows: &[SweepRow]) -> f64 {
    if rows.is_empty() {
        return 0.0;
    }
    rows.iter().filter(|r| !r.is_ok()).count() as f64 / rows.len() as f64
}

/// Runs a sweep protocol end to end and writes its artifacts. Partial
/// failures are recorded in-row; the run only errors out when more than 20%
/// of the points failed, and the files are written first either way.
pub fn run_sweep(plan: &RunPlan) -> CliResult<Artifacts> {
    std::fs::create_dir_all(&plan.out_dir)
        .map_err(|e| CliError::Io(format!("{}: {e}", plan.out_dir.display())))?;

    let variants: Vec<(Option<String>, SystemParams)> = match plan.protocol {
        Protocol::Ablation => ablation_variants(&plan.base)
            .into_iter()
            .map(|(name, p)| (Some(name.to_string()), p))
            .collect(),
        Protocol::LinewidthSweep | Protocol::IntensitySweep => {
            vec![(None, plan.base.clone())]
        }
        Protocol::Spectrum => return run_spectrum(plan),
        Protocol::Calibrate => {
            return Err(CliError::Config(
                "the calibrate protocol runs through the calibrate subcommand, \
which supplies the measured curve"
                    .into(),
            ))
        }
    };

    let mut csv_paths = Vec::new();
    let mut run_metas = Vec::new();
    let mut all_rows: Vec<Vec<SweepRow>> = Vec::new();
    for (variant, params) in &variants {
        let evals = run_points(plan, params)?;
        let rows: Vec<SweepRow> = evals.iter().map(|e| e.row.clone()).collect();
        let diags: Vec<PointDiag> = evals.iter().map(|e| e.diag.clone()).collect();
        let file = match variant {
            Some(name) => format!("sweep_{name}.csv"),
            None => "sweep.csv".to_string(),
        };
        let path = plan.out_dir.join(&file);
        write_file(&path, &records::sweep_to_csv(&rows))?;
        csv_paths.push(path);
        run_metas.push(VariantMeta {
            variant: variant.clone(),
            file,
            params: ParamsConfig::from_system(params),
            points: diags,
        });
        all_rows.push(rows);
    }

    let metadata = RunMetadata {
        schema: "run_metadata".into(),
        version: 1,
        tool_version: env!("CARGO_PKG_VERSION").into(),
        protocol: plan.protocol,
        axis_kind: plan.axis_kind,
        axis_input: plan.axis_input.clone(),
        seed: plan.seed,
        workers: plan.workers,
        fock_auto: plan.fock == FockMode::Auto,
        grid: GridMeta::from_options(&plan.grid),
        runs: run_metas,
    };
    let meta_path = plan.out_dir.join("run.meta.json");
    write_file(&meta_path, &serde_json::to_string_pretty(&metadata).expect("serializable"))?;

    let mut plots = Vec::new();
    if plan.plot {
        plots = plot_artifacts(plan, &csv_paths)?;
    }

    let worst = all_rows.iter().map(|rows| fraction_failed(rows)).fold(0.0, f64::max);
    if worst > 0.2 {
        return Err(CliError::Numerical(format!(
            "{:.0}% of sweep points failed; artifacts in {}",
            worst * 100.0,
            plan.out_dir.display()
        )));
    }
    Ok(Artifacts { csv: csv_paths, metadata: meta_path, plots })
}

/// Single-point protocol: simulate at the first axis drive and store the
/// incoherent spectral density.
fn run_spectrum(plan: &RunPlan) -> CliResult<Artifacts> {
    let j = plan.drives[0];
    let p = plan.base.with_drive(j);
    let (sim, n_used) = match plan.fock {
        FockMode::Fixed(n) => (
            simulate_spectrum(&p.with_fock_dim(n), &plan.grid)
                .map_err(|e| CliError::Numerical(e.to_string()))?,
            n,
        ),
        FockMode::Auto => converge_fock(&p, &plan.grid, |s| {
            let w = s.spectrum.omega.as_slice();
            let v = s.spectrum.values.as_slice();
            Ok(fit_lower_sideband(w, v, s.omega_est)?.peak.fwhm)
        })
        .map_err(|e| CliError::Numerical(e.to_string()))?,
    };

    let w = sim.spectrum.omega.as_slice();
    let v = sim.spectrum.values.as_slice();
    let csv_path = plan.out_dir.join("spectrum.csv");
    write_file(&csv_path, &records::spectrum_to_csv(w, v))?;

    let metadata = RunMetadata {
        schema: "run_metadata".into(),
        version: 1,
        tool_version: env!("CARGO_PKG_VERSION").into(),
        protocol: Protocol::Spectrum,
        axis_kind: plan.axis_kind,
        axis_input: plan.axis_input.clone(),
        seed: plan.seed,
        workers: plan.workers,
        fock_auto: plan.fock == FockMode::Auto,
        grid: GridMeta::from_options(&plan.grid),
        runs: vec![VariantMeta {
            variant: None,
            file: "spectrum.csv".into(),
            params: ParamsConfig::from_system(&p),
            points: vec![PointDiag {
                j,
                n_fock: n_used,
                mean_photon: Some(sim.mean_photon_number()),
                top_fock_population: Some(sim.top_fock_population()),
                tail_resolved: Some(sim.tail_resolved()),
                cavity_pinned: false,
                cavity_held: false,
                held_cavity: None,
                error: None,
            }],
        }],
    };
    let meta_path = plan.out_dir.join("run.meta.json");
    write_file(&meta_path, &serde_json::to_string_pretty(&metadata).expect("serializable"))?;

    let mut plots = Vec::new();
    if plan.plot {
        let svg_path = plan.out_dir.join("spectrum.svg");
        let csv_text = std::fs::read_to_string(&csv_path)
            .map_err(|e| CliError::Io(format!("{}: {e}", csv_path.display())))?;
        write_file(&svg_path, &plot::spectrum_svg(&csv_text)?)?;
        plots.push(svg_path);
    }
    Ok(Artifacts { csv: vec![csv_path], metadata: meta_path, plots })
}

/// Plots are regenerated from the CSV text alone, never from in-memory
/// state, so a stored CSV and its figure can always be reconciled.
fn plot_artifacts(plan: &RunPlan, csv_paths: &[PathBuf]) -> CliResult<Vec<PathBuf>> {
    let mut texts = Vec::new();
    for path in csv_paths {
        texts.push(
            std::fs::read_to_string(path)
                .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?,
        );
    }
    let (name, svg) = match plan.protocol {
        Protocol::LinewidthSweep => ("linewidth.svg", plot::linewidth_svg(&texts[0])?),
        Protocol::IntensitySweep => ("intensity.svg", plot::intensity_svg(&texts[0])?),
        Protocol::Ablation => {
            let refs: Vec<&str> = texts.iter().map(String::as_str).collect();
            ("ablation.svg", plot::ablation_svg(&refs)?)
        }
        Protocol::Spectrum | Protocol::Calibrate => return Ok(Vec::new()),
    };
    let path = plan.out_dir.join(name);
    write_file(&path, &svg)?;
    Ok(vec![path])
}

/// Recomputes one row of a stored sweep from its metadata, for the
/// spot-check harness. The truncation recorded in the row is used as-is so
/// an auto-fock run recomputes at its converged size.
pub fn recompute_row(
    meta: &RunMetadata,
    variant: &VariantMeta,
    index: usize,
    stored: &SweepRow,
) -> CliResult<SweepRow> {
    let base = variant.params.to_system()?;
    let grid = meta.grid.to_options();
    let mut eval = eval_point(&base, stored.j, &grid, FockMode::Fixed(stored.n_fock));
    let diag = variant
        .points
        .get(index)
        .ok_or_else(|| CliError::Config(format!("metadata has no point {index}")))?;
    if let Some(held) = diag.held_cavity {
        let p = base.with_drive(stored.j);
        if let Some(sim) = eval.sim.as_ref() {
            let treatment = CavityTreatment::Hold(LorentzianPeak {
                center: held.center,
                fwhm: held.fwhm,
                area: held.area,
            });
            if let Ok((fit, cavity_area)) = global_fit(&p, sim, &treatment) {
                if let Ok((lo, hi)) = sideband_pair(&fit.fit) {
                    eval.row.upper_fwhm = Some(hi.fwhm);
                    eval.row.area_low = Some(lo.area);
                    eval.row.area_high = Some(hi.area);
                    eval.row.cavity_area = cavity_area;
                    eval.row.global_converged = fit.fit.converged;
                    if matches!(eval.row.error, Some(PointError::GlobalFit)) {
                        eval.row.error = None;
                    }
                }
            }
        }
    }
    Ok(eval.row)
}
