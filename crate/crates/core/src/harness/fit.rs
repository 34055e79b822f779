//! Power-law fits on log-log axes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Fewest points accepted by [`fit_scaling_exponent`].
pub const MIN_FIT_POINTS: usize = 6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub slope: f64,
    /// Natural-log intercept: `Δg ≈ exp(intercept) · T̃^slope`.
    pub intercept: f64,
    pub r2: f64,
    pub points: usize,
}

/// Ordinary least squares of `ln Δg` on `ln T̃` over points with `T̃` in `region`.
pub fn fit_scaling_exponent(points: &[(f64, f64)], region: (f64, f64)) -> Result<PowerLawFit> {
    let (lo, hi) = region;
    let logs: Vec<(f64, f64)> = points
        .iter()
        .filter(|(t, dg)| *t >= lo && *t <= hi && *t > 0.0 && *dg > 0.0)
        .map(|(t, dg)| (t.ln(), dg.ln()))
        .collect();
    let n = logs.len();
    if n < MIN_FIT_POINTS {
        return Err(Error::TooFewPoints {
            needed: MIN_FIT_POINTS,
            got: n,
        });
    }
    let nf = n as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / nf;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / nf;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = logs.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = logs
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum();
    let r2 = if syy > 0.0 { 1.0 - ss_res / syy } else { 1.0 };
    Ok(PowerLawFit {
        slope,
        intercept,
        r2,
        points: n,
    })
}

/// Fit over rows `from..=to` (1-based step numbers) of a `(T̃, Δg)` series.
pub fn fit_steps(points: &[(f64, f64)], from: usize, to: usize) -> Result<PowerLawFit> {
    let from = from.max(1);
    let to = to.min(points.len());
    if from > to {
        return Err(Error::TooFewPoints {
            needed: MIN_FIT_POINTS,
            got: 0,
        });
    }
    let region = (points[from - 1].0, points[to - 1].0);
    fit_scaling_exponent(points, region)
}
