//! Two-segment linear regression for locating a slope change in a
//! linewidth-versus-drive curve, with conservative null rules so plain
//! linear data does not produce a spurious transition.

use crate::error::{Error, Result};

/// Ordinary least squares line y = intercept + slope·x.
#[derive(Debug, Clone, Copy)]
pub struct Line {
    pub slope: f64,
    pub intercept: f64,
    pub sse: f64,
}

pub fn fit_line(x: &[f64], y: &[f64]) -> Result<Line> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch("x and y lengths differ".into()));
    }
    if x.len() < 2 {
        return Err(Error::InvalidData("need at least 2 points for a line".into()));
    }
    let n = x.len() as f64;
    let xm = x.iter().sum::<f64>() / n;
    let ym = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|&v| (v - xm) * (v - xm)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(&a, &b)| (a - xm) * (b - ym)).sum();
    if sxx <= 0.0 {
        return Err(Error::InvalidData("x values are all identical".into()));
    }
    let slope = sxy / sxx;
    let intercept = ym - slope * xm;
    let sse = x
        .iter()
        .zip(y)
        .map(|(&a, &b)| {
            let r = b - (intercept + slope * a);
            r * r
        })
        .sum();
    Ok(Line { slope, intercept, sse })
}

/// A detected slope change at a shared knee sample.
#[derive(Debug, Clone, Copy)]
pub struct Breakpoint {
    /// Index of the knee sample (belongs to both segments).
    pub index: usize,
    /// x at the knee.
    pub x: f64,
    pub below: Line,
    pub above: Line,
    pub sse_segmented: f64,
    pub sse_single: f64,
}

/// Ratio the segmented SSE must improve on the single-line SSE by.
pub const SSE_IMPROVEMENT: f64 = 0.6;
/// The upper slope must fall below this fraction of the lower slope.
pub const SLOPE_DROP: f64 = 0.5;

/// Scans interior knee candidates (each segment keeps at least 3 points,
/// the knee sample belongs to both) and returns the best split, or None
/// when the data does not support a transition: the segmented SSE must be
/// at most 0.6x the single-line SSE and the upper slope less than half
/// the lower slope.
pub fn transition_locator(x: &[f64], y: &[f64]) -> Result<Option<Breakpoint>> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch("x and y lengths differ".into()));
    }
    if x.len() < 5 {
        return Err(Error::InvalidData(format!(
            "{} points cannot hold two 3-point segments",
            x.len()
        )));
    }
    if x.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidData("x must be strictly increasing".into()));
    }
    if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
        return Err(Error::InvalidData("non-finite sample".into()));
    }

    let single = fit_line(x, y)?;

    let mut best: Option<Breakpoint> = None;
    for k in 2..=x.len() - 3 {
        let below = fit_line(&x[..=k], &y[..=k])?;
        let above = fit_line(&x[k..], &y[k..])?;
        let sse = below.sse + above.sse;
        if best.as_ref().map_or(true, |b| sse < b.sse_segmented) {
            best = Some(Breakpoint {
                index: k,
                x: x[k],
                below,
                above,
                sse_segmented: sse,
                sse_single: single.sse,
            });
        }
    }
    let bp = best.expect("len >= 5 guarantees a candidate");

    let improves = bp.sse_segmented <= SSE_IMPROVEMENT * bp.sse_single;
    let flattens = bp.above.slope < SLOPE_DROP * bp.below.slope;
    Ok(if improves && flattens { Some(bp) } else { None })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn piecewise(xs: &[f64], knee: f64, s_lo: f64, s_hi: f64, b: f64) -> Vec<f64> {
        xs.iter()
            .map(|&x| {
                if x <= knee {
                    b + s_lo * x
                } else {
                    b + s_lo * knee + s_hi * (x - knee)
                }
            })
            .collect()
    }

    #[test]
    fn finds_clean_knee() {
        let xs: Vec<f64> = (0..12).map(|i| i as f64 * 10.0).collect();
        let ys = piecewise(&xs, 60.0, 0.02, 0.001, 1.0);
        let bp = transition_locator(&xs, &ys).unwrap().expect("transition");
        assert_eq!(bp.index, 6);
        assert!((bp.x - 60.0).abs() < 1e-12);
        assert!((bp.below.slope - 0.02).abs() < 1e-3);
        assert!(bp.above.slope < 0.01 * bp.below.slope + 1e-3);
    }

    #[test]
    fn straight_line_gives_none() {
        let xs: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|&x| 0.3 + 0.05 * x).collect();
        assert!(transition_locator(&xs, &ys).unwrap().is_none());
    }

    #[test]
    fn noisy_knee_is_located_near_truth() {
        let xs: Vec<f64> = (0..16).map(|i| i as f64 * 8.0).collect();
        let mut ys = piecewise(&xs, 64.0, 0.03, 0.002, 0.8);
        // deterministic small perturbation, well under the slope change
        for (i, v) in ys.iter_mut().enumerate() {
            *v += 0.01 * ((i * 2654435761) % 7) as f64 / 7.0 - 0.005;
        }
        let bp = transition_locator(&xs, &ys).unwrap().expect("transition");
        assert!((bp.index as i64 - 8).unsigned_abs() <= 1, "index {}", bp.index);
    }

    #[test]
    fn steepening_slope_is_not_a_transition() {
        let xs: Vec<f64> = (0..12).map(|i| i as f64 * 10.0).collect();
        let ys = piecewise(&xs, 60.0, 0.001, 0.02, 1.0);
        assert!(transition_locator(&xs, &ys).unwrap().is_none());
    }

    #[test]
    fn input_validation() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        let ys = [0.0; 4];
        assert!(transition_locator(&xs, &ys).is_err());
        let xs5 = [0.0, 1.0, 1.0, 2.0, 3.0];
        let ys5 = [0.0; 5];
        assert!(transition_locator(&xs5, &ys5).is_err());
        let xs_ok = [0.0, 1.0, 2.0, 3.0, 4.0];
        let mut ys_nan = [0.0; 5];
        ys_nan[2] = f64::NAN;
        assert!(transition_locator(&xs_ok, &ys_nan).is_err());
        assert!(fit_line(&[1.0, 1.0], &[0.0, 1.0]).is_err());
    }
}
