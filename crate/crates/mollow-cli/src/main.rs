use clap::{Args, Parser, Subcommand};
use mollow_cli::calibrate_run::run_calibration;
use mollow_cli::config::{Protocol, RunConfig};
use mollow_cli::error::{CliError, CliResult};
use mollow_cli::presets::{preset, Figure};
use mollow_cli::records;
use mollow_cli::sweep::{run_sweep, Artifacts, FockMode, RunPlan};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "mollow",
    about = "Driven dot-cavity emission spectra: sweeps, calibration, figure recipes",
    version
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct RunArgs {
    /// TOML run configuration
    #[arg(long)]
    config: PathBuf,
    /// Output directory (default: the config's output_dir, or "out")
    #[arg(long)]
    out: Option<PathBuf>,
    /// Fock truncation: an integer, or "auto" to double until converged
    #[arg(long)]
    fock: Option<String>,
    /// Sweep worker threads
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Write SVG figures (default on)
    #[arg(long, overrides_with = "no_plot")]
    plot: bool,
    #[arg(long, overrides_with = "plot")]
    no_plot: bool,
}

impl RunArgs {
    fn plot_enabled(&self) -> bool {
        !self.no_plot
    }

    fn fock_mode(&self) -> CliResult<Option<FockMode>> {
        parse_fock(self.fock.as_deref())
    }
}

fn parse_fock(s: Option<&str>) -> CliResult<Option<FockMode>> {
    match s {
        None => Ok(None),
        Some("auto") => Ok(Some(FockMode::Auto)),
        Some(n) => {
            let n: usize = n.parse().map_err(|_| {
                CliError::Config(format!("--fock expects an integer or \"auto\", got {n:?}"))
            })?;
            if n < 2 {
                return Err(CliError::Config(format!("--fock {n} is below the minimum of 2")));
            }
            Ok(Some(FockMode::Fixed(n)))
        }
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Simulate one emission spectrum at the first sweep drive
    Spectrum(RunArgs),
    /// Run the sweep protocol named in the config
    Sweep(RunArgs),
    /// Fit the two phonon rates to a measured linewidth curve
    Calibrate {
        #[command(flatten)]
        args: RunArgs,
        /// CSV with columns omega_sq_GHz2,fwhm_GHz[,fwhm_sigma_GHz]
        data: PathBuf,
    },
    /// Re-run a stored figure recipe
    Reproduce {
        /// One of fig2b, fig2d, fig3b, fig3c, fig4a, fig4b
        figure: String,
        /// Output directory (default: the figure name)
        #[arg(long)]
        out: Option<PathBuf>,
        /// Fock truncation: an integer, or "auto"
        #[arg(long)]
        fock: Option<String>,
        /// Sweep worker threads
        #[arg(long, default_value_t = 1)]
        workers: usize,
        /// Write SVG figures (default on)
        #[arg(long, overrides_with = "no_plot")]
        plot: bool,
        #[arg(long, overrides_with = "plot")]
        no_plot: bool,
    },
    /// Report the slope breakpoint of a stored linewidth sweep
    LocateTransition {
        /// sweep.csv produced by a linewidth sweep
        sweep_csv: PathBuf,
    },
}

fn out_dir(cli: &Option<PathBuf>, config: &RunConfig) -> PathBuf {
    cli.clone()
        .or_else(|| config.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn report(artifacts: &Artifacts) {
    for p in &artifacts.csv {
        println!("wrote {}", p.display());
    }
    println!("wrote {}", artifacts.metadata.display());
    for p in &artifacts.plots {
        println!("wrote {}", p.display());
    }
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.cmd {
        Cmd::Spectrum(args) => {
            let mut config = RunConfig::from_file(&args.config)?;
            config.protocol = Protocol::Spectrum;
            let plan = RunPlan::resolve(
                &config,
                out_dir(&args.out, &config),
                args.fock_mode()?,
                args.workers,
                args.plot_enabled(),
            )?;
            report(&run_sweep(&plan)?);
            Ok(())
        }
        Cmd::Sweep(args) => {
            let config = RunConfig::from_file(&args.config)?;
            let plan = RunPlan::resolve(
                &config,
                out_dir(&args.out, &config),
                args.fock_mode()?,
                args.workers,
                args.plot_enabled(),
            )?;
            report(&run_sweep(&plan)?);
            Ok(())
        }
        Cmd::Calibrate { args, data } => {
            let config = RunConfig::from_file(&args.config)?;
            let out = out_dir(&args.out, &config);
            let artifacts = run_calibration(&config, &data, &out)?;
            let r = &artifacts.report;
            println!(
                "gamma_ph_ads = {:.4} +/- {:.4} GHz, gamma_ph_asp = {:.4} +/- {:.4} GHz \
(chi2 {:.3e}, {} iterations{})",
                r.gamma_ph_ads,
                r.ads_sigma,
                r.gamma_ph_asp,
                r.asp_sigma,
                r.chi2,
                r.iterations,
                if r.clamped { ", clamped at zero" } else { "" }
            );
            println!("wrote {}", artifacts.report_path.display());
            println!("wrote {}", artifacts.predicted_path.display());
            Ok(())
        }
        Cmd::Reproduce { figure, out, fock, workers, plot: _, no_plot } => {
            let fig = Figure::parse(&figure)?;
            let config = preset(fig)?;
            let out = out.unwrap_or_else(|| PathBuf::from(fig.name()));
            let plan =
                RunPlan::resolve(&config, out, parse_fock(fock.as_deref())?, workers, !no_plot)?;
            report(&run_sweep(&plan)?);
            Ok(())
        }
        Cmd::LocateTransition { sweep_csv } => {
            let text = std::fs::read_to_string(&sweep_csv)
                .map_err(|e| CliError::Io(format!("{}: {e}", sweep_csv.display())))?;
            let rows = records::sweep_from_csv(&text)?;
            let mut pts: Vec<(f64, f64)> = rows
                .iter()
                .filter_map(|r| match (r.omega, r.lower_fwhm) {
                    (Some(w), Some(f)) => Some((w * w, f)),
                    _ => None,
                })
                .collect();
            pts.sort_by(|a, b| a.0.total_cmp(&b.0));
            let x: Vec<f64> = pts.iter().map(|p| p.0).collect();
            let y: Vec<f64> = pts.iter().map(|p| p.1).collect();
            let found = mollow::breakpoint::transition_locator(&x, &y).map_err(|e| match e {
                mollow::Error::InvalidData(_) => CliError::Config(e.to_string()),
                other => CliError::Numerical(other.to_string()),
            })?;
            match found {
                Some(bp) => println!(
                    "{{\"breakpoint_GHz2\": {:.6}, \"below_slope\": {:.6e}, \
\"above_slope\": {:.6e}}}",
                    bp.x, bp.below.slope, bp.above.slope
                ),
                None => println!("{{\"breakpoint_GHz2\": null}}"),
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
