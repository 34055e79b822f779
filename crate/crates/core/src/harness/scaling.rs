//! Precision-versus-time experiments: one noise-free run, fitted on log-log axes.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::harness::config::RunConfig;
use crate::harness::fit::{fit_steps, PowerLawFit};
use crate::harness::run::{run_bge, EstimationTrace};
use crate::oracle::{scaling_law, sigma_sequence, ScalingLaw};
use crate::schedule::ScheduleKind;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub trace: EstimationTrace,
    /// Step (1-based, as in the trace) where `T` first reaches `T_max`.
    pub cap_step: usize,
    pub ramp_fit: Option<PowerLawFit>,
    pub plateau_fit: Option<PowerLawFit>,
    pub law: ScalingLaw,
    /// Predicted mid-fringe width per step at the configured contrast.
    pub oracle_sigma: Vec<f64>,
}

impl ScalingReport {
    /// Largest `|Δg_i / σ_i − 1|` over steps `from..` of the trace.
    pub fn max_oracle_deviation(&self, from: usize) -> f64 {
        self.trace
            .rows
            .iter()
            .zip(&self.oracle_sigma)
            .filter(|(r, _)| r.step >= from)
            .map(|(r, s)| (r.dg_est / s - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

/// Run `config` once and fit the ramp and plateau regions.
///
/// The ramp fit spans `fit_from_step` up to the first `T_max` step; the
/// plateau fit starts `post_cap_skip` steps after it. Fits with too few
/// points are reported as `None`.
pub fn scaling_experiment(config: &RunConfig) -> Result<ScalingReport> {
    let trace = run_bge(config)?;
    let times = config.schedule.build_sequence()?;
    let t_max = config.schedule.t_max;
    let cap_step = times
        .iter()
        .position(|&t| t >= t_max * (1.0 - 1e-12))
        .map_or(times.len(), |i| i + 1);
    let points = trace.scaling_points();
    let n = points.len();
    let spec = &config.scaling;
    let (ramp_fit, plateau_fit) = if config.schedule.kind == ScheduleKind::Fixed {
        (fit_steps(&points, spec.fit_from_step, n).ok(), None)
    } else {
        (
            fit_steps(&points, spec.fit_from_step, cap_step.min(n)).ok(),
            fit_steps(&points, cap_step + spec.post_cap_skip, n).ok(),
        )
    };
    Ok(ScalingReport {
        law: scaling_law(&config.schedule, &config.interferometer)?,
        oracle_sigma: sigma_sequence(&config.interferometer, &times)
            .into_iter()
            .map(|s| s / config.interferometer.contrast)
            .collect(),
        trace,
        cap_step,
        ramp_fit,
        plateau_fit,
    })
}
