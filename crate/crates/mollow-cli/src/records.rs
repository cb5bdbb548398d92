//! CSV persistence for sweep records and linewidth curves.
//!
//! Both formats carry a versioned schema line so a reader can refuse files
//! it does not understand. Floats are written with 9 significant digits,
//! which makes re-running a preset byte-identical and keeps enough precision
//! to recompute any row from the recorded parameters.

use crate::error::{CliError, CliResult};
use mollow::calibrate::{LinewidthCurve, LinewidthPoint};
use std::fmt::Write as _;

pub const SWEEP_SCHEMA: &str = "# schema: sweep_record v1";
pub const SWEEP_HEADER: &str = "j,omega_extracted_GHz,lower_fwhm_GHz,upper_fwhm_GHz,\
area_low,area_high,cavity_area,n_fock,windowed_converged,global_converged,error";

pub const CURVE_SCHEMA: &str = "# schema: linewidth_curve v1";
pub const CURVE_HEADER_FULL: &str = "omega_sq_GHz2,fwhm_GHz,fwhm_sigma_GHz";
pub const CURVE_HEADER_BARE: &str = "omega_sq_GHz2,fwhm_GHz";

pub const SPECTRUM_SCHEMA: &str = "# schema: spectrum_trace v1";
pub const SPECTRUM_HEADER: &str = "omega_GHz,spectral_density";

/// Why a sweep point produced no usable numbers. The code is stored in the
/// CSV row so a partial sweep still documents what failed where.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PointError {
    Simulation,
    GlobalFit,
    WindowedFit,
}

impl PointError {
    pub fn code(self) -> &'static str {
        match self {
            PointError::Simulation => "simulation",
            PointError::GlobalFit => "global_fit",
            PointError::WindowedFit => "windowed_fit",
        }
    }

    fn from_code(s: &str) -> Option<PointError> {
        match s {
            "simulation" => Some(PointError::Simulation),
            "global_fit" => Some(PointError::GlobalFit),
            "windowed_fit" => Some(PointError::WindowedFit),
            _ => None,
        }
    }
}

/// One sweep point. Fields that a failed stage could not produce are None
/// and serialize as empty cells.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub j: f64,
    pub omega: Option<f64>,
    pub lower_fwhm: Option<f64>,
    pub upper_fwhm: Option<f64>,
    pub area_low: Option<f64>,
    pub area_high: Option<f64>,
    pub cavity_area: Option<f64>,
    pub n_fock: usize,
    pub windowed_converged: bool,
    pub global_converged: bool,
    pub error: Option<PointError>,
}

impl SweepRow {
    pub fn is_ok(&self) -> bool {
        self.error.is_none()
    }
}

/// 9 significant digits, scientific. Values quantize to this grid on write;
/// rereading our own output reformats to the same bytes, so reruns and
/// recomputation checks diff clean.
pub fn format_sig(x: f64) -> String {
    format!("{x:.8e}")
}

fn format_opt(x: Option<f64>) -> String {
    x.map(format_sig).unwrap_or_default()
}

pub fn sweep_to_csv(rows: &[SweepRow]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{SWEEP_SCHEMA}");
    let _ = writeln!(out, "{SWEEP_HEADER}");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            format_sig(r.j),
            format_opt(r.omega),
            format_opt(r.lower_fwhm),
            format_opt(r.upper_fwhm),
            format_opt(r.area_low),
            format_opt(r.area_high),
            format_opt(r.cavity_area),
            r.n_fock,
            r.windowed_converged as u8,
            r.global_converged as u8,
            r.error.map(PointError::code).unwrap_or(""),
        );
    }
    out
}

fn parse_f64(field: &str, name: &str, line: usize) -> CliResult<f64> {
    let v: f64 = field
        .trim()
        .parse()
        .map_err(|_| CliError::Config(format!("line {line}: {name} is not a number: {field:?}")))?;
    if !v.is_finite() {
        return Err(CliError::Config(format!("line {line}: {name} is not finite")));
    }
    Ok(v)
}

fn parse_opt_f64(field: &str, name: &str, line: usize) -> CliResult<Option<f64>> {
    if field.trim().is_empty() {
        Ok(None)
    } else {
        parse_f64(field, name, line).map(Some)
    }
}

fn parse_flag(field: &str, name: &str, line: usize) -> CliResult<bool> {
    match field.trim() {
        "0" => Ok(false),
        "1" => Ok(true),
        other => Err(CliError::Config(format!(
            "line {line}: {name} must be 0 or 1, got {other:?}"
        ))),
    }
}

/// Parses a sweep-record CSV produced by [`sweep_to_csv`].
pub fn sweep_from_csv(text: &str) -> CliResult<Vec<SweepRow>> {
    let mut lines = text.lines().enumerate();
    let (_, schema) = lines
        .next()
        .ok_or_else(|| CliError::Config("empty sweep file".into()))?;
    if schema.trim() != SWEEP_SCHEMA {
        return Err(CliError::Config(format!(
            "line 1: expected {SWEEP_SCHEMA:?}, got {schema:?}"
        )));
    }
    let (_, header) = lines
        .next()
        .ok_or_else(|| CliError::Config("sweep file has no column header".into()))?;
    if header.trim() != SWEEP_HEADER {
        return Err(CliError::Config(format!("line 2: unexpected column header {header:?}")));
    }

    let mut rows = Vec::new();
    for (idx, raw) in lines {
        let line = idx + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = raw.split(',').collect();
        if fields.len() != 11 {
            return Err(CliError::Config(format!(
                "line {line}: expected 11 fields, got {}",
                fields.len()
            )));
        }
        let error = match fields[10].trim() {
            "" => None,
            code => Some(PointError::from_code(code).ok_or_else(|| {
                CliError::Config(format!("line {line}: unknown error code {code:?}"))
            })?),
        };
        let n_fock: usize = fields[7].trim().parse().map_err(|_| {
            CliError::Config(format!("line {line}: n_fock is not an integer: {:?}", fields[7]))
        })?;
        rows.push(SweepRow {
            j: parse_f64(fields[0], "j", line)?,
            omega: parse_opt_f64(fields[1], "omega_extracted_GHz", line)?,
            lower_fwhm: parse_opt_f64(fields[2], "lower_fwhm_GHz", line)?,
            upper_fwhm: parse_opt_f64(fields[3], "upper_fwhm_GHz", line)?,
            area_low: parse_opt_f64(fields[4], "area_low", line)?,
            area_high: parse_opt_f64(fields[5], "area_high", line)?,
            cavity_area: parse_opt_f64(fields[6], "cavity_area", line)?,
            n_fock,
            windowed_converged: parse_flag(fields[8], "windowed_converged", line)?,
            global_converged: parse_flag(fields[9], "global_converged", line)?,
            error,
        });
    }
    Ok(rows)
}

/// An imported linewidth curve plus provenance the metadata wants to keep.
#[derive(Debug, Clone)]
pub struct ImportedCurve {
    pub curve: LinewidthCurve,
    /// True when the file had no fwhm_sigma column and the 5% default was
    /// injected.
    pub sigma_defaulted: bool,
}

/// Parses a linewidth-curve CSV. The sigma column is optional; omega_sq must
/// be strictly increasing in file order so a shuffled or duplicated file is
/// caught here with line numbers rather than silently reordered.
pub fn import_linewidth_curve(text: &str) -> CliResult<ImportedCurve> {
    let mut lines = text.lines().enumerate().peekable();
    if let Some((_, first)) = lines.peek() {
        if first.trim() == CURVE_SCHEMA {
            lines.next();
        } else if first.trim_start().starts_with('#') {
            return Err(CliError::Config(format!(
                "line 1: unrecognized schema line {:?}, expected {CURVE_SCHEMA:?}",
                first.trim()
            )));
        }
    }
    let (header_idx, header) = lines
        .next()
        .ok_or_else(|| CliError::Config("empty linewidth file".into()))?;
    let with_sigma = match header.trim() {
        h if h == CURVE_HEADER_FULL => true,
        h if h == CURVE_HEADER_BARE => false,
        other => {
            return Err(CliError::Config(format!(
                "line {}: unexpected column header {other:?}",
                header_idx + 1
            )))
        }
    };

    let expected = if with_sigma { 3 } else { 2 };
    let mut points: Vec<LinewidthPoint> = Vec::new();
    // (value, line) of each omega_sq, to report both offenders on duplicates
    let mut seen: Vec<(f64, usize)> = Vec::new();
    let mut sigma_defaulted = !with_sigma;
    for (idx, raw) in lines {
        let line = idx + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = raw.split(',').collect();
        if fields.len() != expected {
            return Err(CliError::Config(format!(
                "line {line}: expected {expected} fields, got {}",
                fields.len()
            )));
        }
        let omega_sq = parse_f64(fields[0], "omega_sq_GHz2", line)?;
        let fwhm = parse_f64(fields[1], "fwhm_GHz", line)?;
        if !(omega_sq > 0.0) {
            return Err(CliError::Config(format!(
                "line {line}: omega_sq_GHz2 must be > 0, got {omega_sq}"
            )));
        }
        if !(fwhm > 0.0) {
            return Err(CliError::Config(format!(
                "line {line}: fwhm_GHz must be > 0, got {fwhm}"
            )));
        }
        if let Some((dup, dup_line)) = seen.iter().find(|(v, _)| *v == omega_sq) {
            return Err(CliError::Config(format!(
                "lines {dup_line} and {line}: duplicate omega_sq_GHz2 = {dup}"
            )));
        }
        if let Some(&(prev, prev_line)) = seen.last() {
            if omega_sq < prev {
                return Err(CliError::Config(format!(
                    "line {line}: omega_sq_GHz2 = {omega_sq} breaks the increasing order \
set at line {prev_line} ({prev})"
                )));
            }
        }
        let sigma = if with_sigma {
            let s = parse_f64(fields[2], "fwhm_sigma_GHz", line)?;
            if s < 0.0 {
                return Err(CliError::Config(format!(
                    "line {line}: fwhm_sigma_GHz must be >= 0, got {s}"
                )));
            }
            if s == 0.0 {
                sigma_defaulted = true;
            }
            s
        } else {
            0.0
        };
        seen.push((omega_sq, line));
        points.push(LinewidthPoint { omega_sq, fwhm, sigma });
    }

    let curve = LinewidthCurve::new(points).map_err(|e| CliError::Config(e.to_string()))?;
    Ok(ImportedCurve { curve, sigma_defaulted })
}

pub fn curve_to_csv(curve: &LinewidthCurve) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{CURVE_SCHEMA}");
    let _ = writeln!(out, "{CURVE_HEADER_FULL}");
    for p in &curve.points {
        let _ = writeln!(
            out,
            "{},{},{}",
            format_sig(p.omega_sq),
            format_sig(p.fwhm),
            format_sig(p.sigma)
        );
    }
    out
}

pub fn spectrum_to_csv(omega: &[f64], values: &[f64]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{SPECTRUM_SCHEMA}");
    let _ = writeln!(out, "{SPECTRUM_HEADER}");
    for (w, v) in omega.iter().zip(values) {
        let _ = writeln!(out, "{},{}", format_sig(*w), format_sig(*v));
    }
    out
}

/// Parses a spectrum CSV; the plot command regenerates figures from this.
pub fn spectrum_from_csv(text: &str) -> CliResult<(Vec<f64>, Vec<f64>)> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, schema)) if schema.trim() == SPECTRUM_SCHEMA => {}
        Some((_, schema)) => {
            return Err(CliError::Config(format!(
                "line 1: expected {SPECTRUM_SCHEMA:?}, got {schema:?}"
            )))
        }
        None => return Err(CliError::Config("empty spectrum file".into())),
    }
    match lines.next() {
        Some((_, header)) if header.trim() == SPECTRUM_HEADER => {}
        _ => return Err(CliError::Config("spectrum file has no column header".into())),
    }
    let mut omega = Vec::new();
    let mut values = Vec::new();
    for (idx, raw) in lines {
        let line = idx + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = raw.split(',').collect();
        if fields.len() != 2 {
            return Err(CliError::Config(format!(
                "line {line}: expected 2 fields, got {}",
                fields.len()
            )));
        }
        omega.push(parse_f64(fields[0], "omega_GHz", line)?);
        values.push(parse_f64(fields[1], "spectral_density", line)?);
    }
    Ok((omega, values))
}
