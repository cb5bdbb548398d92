//! Static SVG figures rendered from CSV text.
//!
//! Each function takes the stored CSV, not in-memory results, so a figure
//! can always be regenerated from the artifact alone and the two can never
//! disagree. Output is plain strings with fixed formatting; identical CSV
//! input yields identical SVG bytes.

use crate::error::{CliError, CliResult};
use crate::records;
use std::fmt::Write as _;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 440.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 24.0;
const MARGIN_T: f64 = 36.0;
const MARGIN_B: f64 = 56.0;

const PALETTE: [&str; 3] = ["#1f77b4", "#2ca02c", "#111111"];

struct Series<'a> {
    label: &'a str,
    points: Vec<(f64, f64)>,
}

fn axis_label(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let a = v.abs();
    if a >= 1e4 || a < 1e-2 {
        format!("{v:.2e}")
    } else {
        format!("{v:.3}")
    }
}

/// Shared frame: axes, four ticks per axis, polylines, legend.
fn render(title: &str, xlabel: &str, ylabel: &str, series: &[Series]) -> CliResult<String> {
    let pts: Vec<(f64, f64)> = series.iter().flat_map(|s| s.points.iter().copied()).collect();
    if pts.is_empty() {
        return Err(CliError::Numerical(
            "no finite data points survived for plotting".into(),
        ));
    }
    let (mut x0, mut x1) = pts
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.0), b.max(p.0)));
    let (mut y0, mut y1) = pts
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.1), b.max(p.1)));
    if x1 == x0 {
        x0 -= 0.5;
        x1 += 0.5;
    }
    if y1 == y0 {
        y0 -= 0.5;
        y1 += 0.5;
    }
    let xpad = 0.04 * (x1 - x0);
    let ypad = 0.06 * (y1 - y0);
    x0 -= xpad;
    x1 += xpad;
    y0 -= ypad;
    y1 += ypad;

    let px = |x: f64| MARGIN_L + (x - x0) / (x1 - x0) * (WIDTH - MARGIN_L - MARGIN_R);
    let py = |y: f64| HEIGHT - MARGIN_B - (y - y0) / (y1 - y0) * (HEIGHT - MARGIN_T - MARGIN_B);

    let mut out = String::new();
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\" font-size=\"13\">"
    );
    let _ = writeln!(out, "<rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>");
    let _ = writeln!(
        out,
        "<text x=\"{:.1}\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">{title}</text>",
        (MARGIN_L + WIDTH - MARGIN_R) / 2.0
    );

    // frame
    let _ = writeln!(
        out,
        "<rect x=\"{MARGIN_L}\" y=\"{MARGIN_T}\" width=\"{:.1}\" height=\"{:.1}\" \
fill=\"none\" stroke=\"#444\"/>",
        WIDTH - MARGIN_L - MARGIN_R,
        HEIGHT - MARGIN_T - MARGIN_B
    );

    for k in 0..=4 {
        let f = k as f64 / 4.0;
        let xv = x0 + f * (x1 - x0);
        let yv = y0 + f * (y1 - y0);
        let _ = writeln!(
            out,
            "<line x1=\"{0:.1}\" y1=\"{1:.1}\" x2=\"{0:.1}\" y2=\"{2:.1}\" stroke=\"#444\"/>",
            px(xv),
            HEIGHT - MARGIN_B,
            HEIGHT - MARGIN_B + 5.0
        );
        let _ = writeln!(
            out,
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{}</text>",
            px(xv),
            HEIGHT - MARGIN_B + 20.0,
            axis_label(xv)
        );
        let _ = writeln!(
            out,
            "<line x1=\"{0:.1}\" y1=\"{1:.1}\" x2=\"{2:.1}\" y2=\"{1:.1}\" stroke=\"#444\"/>",
            MARGIN_L - 5.0,
            py(yv),
            MARGIN_L
        );
        let _ = writeln!(
            out,
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">{}</text>",
            MARGIN_L - 9.0,
            py(yv) + 4.0,
            axis_label(yv)
        );
    }
    let _ = writeln!(
        out,
        "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{xlabel}</text>",
        (MARGIN_L + WIDTH - MARGIN_R) / 2.0,
        HEIGHT - 12.0
    );
    let _ = writeln!(
        out,
        "<text x=\"16\" y=\"{:.1}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {0:.1})\">{ylabel}</text>",
        (MARGIN_T + HEIGHT - MARGIN_B) / 2.0
    );

    for (si, s) in series.iter().enumerate() {
        let color = PALETTE[si % PALETTE.len()];
        let mut path = String::new();
        for (x, y) in &s.points {
            let _ = write!(path, "{:.2},{:.2} ", px(*x), py(*y));
        }
        let _ = writeln!(
            out,
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.6\"/>",
            path.trim_end()
        );
        for (x, y) in &s.points {
            let _ = writeln!(
                out,
                "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"2.4\" fill=\"{color}\"/>",
                px(*x),
                py(*y)
            );
        }
        if series.len() > 1 {
            let ly = MARGIN_T + 16.0 + 18.0 * si as f64;
            let _ = writeln!(
                out,
                "<line x1=\"{0:.1}\" y1=\"{ly:.1}\" x2=\"{1:.1}\" y2=\"{ly:.1}\" \
stroke=\"{color}\" stroke-width=\"1.6\"/>",
                MARGIN_L + 10.0,
                MARGIN_L + 34.0
            );
            let _ = writeln!(
                out,
                "<text x=\"{:.1}\" y=\"{:.1}\">{}</text>",
                MARGIN_L + 40.0,
                ly + 4.0,
                s.label
            );
        }
    }
    let _ = writeln!(out, "</svg>");
    Ok(out)
}

pub fn spectrum_svg(csv_text: &str) -> CliResult<String> {
    let (omega, values) = records::spectrum_from_csv(csv_text)?;
    let points = omega
        .iter()
        .zip(&values)
        .filter(|(w, v)| w.is_finite() && v.is_finite())
        .map(|(&w, &v)| (w, v))
        .collect();
    render(
        "Incoherent spectral density",
        "detuning from laser (GHz)",
        "spectral density",
        &[Series { label: "spectrum", points }],
    )
}

fn linewidth_points(csv_text: &str) -> CliResult<Vec<(f64, f64)>> {
    let rows = records::sweep_from_csv(csv_text)?;
    Ok(rows
        .iter()
        .filter_map(|r| match (r.omega, r.lower_fwhm) {
            (Some(w), Some(f)) if w.is_finite() && f.is_finite() => Some((w * w, f)),
            _ => None,
        })
        .collect())
}

pub fn linewidth_svg(csv_text: &str) -> CliResult<String> {
    let points = linewidth_points(csv_text)?;
    render(
        "Lower-sideband linewidth vs drive",
        "|\u{03a9}/2\u{03c0}|\u{00b2} (GHz\u{00b2})",
        "FWHM (GHz)",
        &[Series { label: "linewidth", points }],
    )
}

pub fn intensity_svg(csv_text: &str) -> CliResult<String> {
    let rows = records::sweep_from_csv(csv_text)?;
    let points: Vec<(f64, f64)> = rows
        .iter()
        .filter_map(|r| match (r.omega, r.area_low, r.area_high) {
            (Some(w), Some(lo), Some(hi)) if lo != 0.0 => Some((w, hi / lo)),
            _ => None,
        })
        .filter(|(w, r)| w.is_finite() && r.is_finite())
        .collect();
    render(
        "Sideband intensity ratio",
        "\u{03a9}/2\u{03c0} (GHz)",
        "area ratio high/low",
        &[Series { label: "ratio", points }],
    )
}

/// Three-curve ablation figure; expects the CSVs in the order written by
/// the ablation protocol (jc, dephasing, full).
pub fn ablation_svg(csv_texts: &[&str]) -> CliResult<String> {
    if csv_texts.len() != 3 {
        return Err(CliError::Config(format!(
            "ablation plot needs 3 CSVs, got {}",
            csv_texts.len()
        )));
    }
    let labels = ["Jaynes-Cummings only", "with pure dephasing", "full model"];
    let mut series = Vec::new();
    for (text, label) in csv_texts.iter().zip(labels) {
        series.push(Series { label, points: linewidth_points(text)? });
    }
    render(
        "Sideband linewidth, dissipator ablation",
        "|\u{03a9}/2\u{03c0}|\u{00b2} (GHz\u{00b2})",
        "FWHM (GHz)",
        &series,
    )
}
