//! Closed-form precision predictions.
//!
//! Near mid-fringe each shot contributes a Gaussian likelihood of width
//! `1 / (√R n_B k_eff T²)` (unit contrast). Chaining them gives the
//! posterior width for any schedule and the power laws per ramp shape.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::physics::InterferometerConfig;
use crate::schedule::{Schedule, ScheduleKind};

/// Posterior standard deviation after shots at `times`, unit contrast.
pub fn posterior_sigma(cfg: &InterferometerConfig, times: &[f64]) -> Result<f64> {
    if times.is_empty() {
        return Err(Error::TooFewPoints { needed: 1, got: 0 });
    }
    let sum_t4: f64 = times.iter().map(|t| t.powi(4)).sum();
    Ok(1.0 / (cfg.atoms.sqrt() * f64::from(cfg.bragg_order) * cfg.k_eff * sum_t4.sqrt()))
}

/// [`posterior_sigma`] for the configured contrast, at mid-fringe.
pub fn contrast_limited_sigma(cfg: &InterferometerConfig, times: &[f64]) -> Result<f64> {
    Ok(posterior_sigma(cfg, times)? / cfg.contrast)
}

/// [`posterior_sigma`] after each prefix `T_1..T_i` of `times`.
pub fn sigma_sequence(cfg: &InterferometerConfig, times: &[f64]) -> Vec<f64> {
    let mut sum_t4 = 0.0;
    times
        .iter()
        .map(|t| {
            sum_t4 += t.powi(4);
            1.0 / (cfg.atoms.sqrt() * f64::from(cfg.bragg_order) * cfg.k_eff * sum_t4.sqrt())
        })
        .collect()
}

/// Width of the product of two Gaussians of widths `a` and `b`.
pub fn gaussian_product_sigma(a: f64, b: f64) -> f64 {
    a * b / (a * a + b * b).sqrt()
}

/// Power law `Δg ≈ prefactor · T̃^exponent` on a range of total time `T̃`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingPrediction {
    pub exponent: f64,
    /// In (m/s²)·s^|exponent|.
    pub prefactor: f64,
    /// Range `[lo, hi]` of `T̃` (s) where the law applies.
    pub valid_from: f64,
    pub valid_to: f64,
}

impl ScalingPrediction {
    pub fn eval(&self, t_tilde: f64) -> f64 {
        self.prefactor * t_tilde.powf(self.exponent)
    }
}

/// Predictions for the ramp and for the plateau at `T_max`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingLaw {
    pub ramp: ScalingPrediction,
    pub plateau: ScalingPrediction,
}

fn ramp_prefactor_exponential(a: f64) -> f64 {
    (a.powi(4) - 1.0).sqrt() / (a - 1.0).powi(2)
}

fn ramp_prefactor_linear(b: f64) -> f64 {
    5f64.sqrt() / (b.powf(0.75) * 2f64.powf(1.25))
}

/// Asymptotic scaling for `schedule` (unit contrast).
pub fn scaling_law(schedule: &Schedule, cfg: &InterferometerConfig) -> Result<ScalingLaw> {
    let seq = schedule.build_sequence()?;
    let shot = 1.0 / (cfg.atoms.sqrt() * f64::from(cfg.bragg_order) * cfg.k_eff);
    let ramp_len = schedule.ramp_length() + usize::from(schedule.point_identification);
    let ramp_end: f64 = seq.iter().take(ramp_len).sum();
    let plateau = ScalingPrediction {
        exponent: -0.5,
        prefactor: shot / schedule.t_max.powf(1.5),
        valid_from: ramp_end,
        valid_to: f64::INFINITY,
    };
    let (exponent, prefactor) = match schedule.kind {
        ScheduleKind::Fixed => (-0.5, plateau.prefactor),
        ScheduleKind::Linear { b } => (-1.25, shot * ramp_prefactor_linear(b)),
        ScheduleKind::Exponential { a } => (-2.0, shot * ramp_prefactor_exponential(a)),
        ScheduleKind::VarRatio { .. } => {
            // no closed form; anchor at the end of the ramp
            let ramp = &seq[..ramp_len.min(seq.len())];
            let t_end: f64 = ramp.iter().sum();
            (-2.25, posterior_sigma(cfg, ramp)? * t_end.powf(2.25))
        }
    };
    let ramp = ScalingPrediction {
        exponent,
        prefactor,
        valid_from: seq[0],
        valid_to: if matches!(schedule.kind, ScheduleKind::Fixed) {
            f64::INFINITY
        } else {
            ramp_end
        },
    };
    Ok(ScalingLaw { ramp, plateau })
}

/// Frequentist single-shot precision in g at phase `phi`.
pub fn frequentist_shot_precision(cfg: &InterferometerConfig, t: f64, phi: f64) -> Result<f64> {
    let c = cfg.contrast;
    let slope = (0.5 * c * phi.sin()).abs();
    if slope < 1e-12 * c {
        return Err(Error::FringeExtremum(phi));
    }
    let var = 0.25 * (1.0 - c * phi.cos()) * (1.0 + c * phi.cos()) / cfg.atoms;
    Ok(var.sqrt() / slope / cfg.phase_scale(t))
}

/// Precision ratio `Δg(R1) / Δg(R2)`.
pub fn atom_number_ratio(r1: f64, r2: f64) -> f64 {
    (r2 / r1).sqrt()
}
