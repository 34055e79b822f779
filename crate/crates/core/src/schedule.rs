//! Interrogation-time schedules and the adaptive control rule.

use std::f64::consts::{FRAC_PI_2, TAU};

use serde::{Deserialize, Serialize};

use crate::bayes::Estimate;
use crate::error::{check_range, Error, Result};
use crate::physics::InterferometerConfig;

/// Shape of the interrogation-time ramp.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScheduleKind {
    /// Every shot at `T_max`.
    Fixed,
    /// `T` grows by a constant increment `b` (s).
    Linear { b: f64 },
    /// `T` grows by a constant ratio `a`.
    Exponential { a: f64 },
    /// Ratio grows along the ramp. Counting the repeated `T_1` as step 2,
    /// step `i >= 3` is `a0 + (i - 3) d` times the previous one.
    VarRatio { a0: f64, d: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    #[serde(flatten)]
    pub kind: ScheduleKind,
    pub t_min: f64,
    pub t_max: f64,
    /// Number of measurements, not counting the point-identification repeat.
    pub steps: usize,
    /// Repeat `T_1` once so the adaptive control can pick the right peak.
    pub point_identification: bool,
}

// Slack for ramp-length rounding, so that an exact ratio such as
// T_max = T_min * a^n does not gain a spurious extra step.
const RAMP_SLACK: f64 = 1e-9;

impl Schedule {
    /// Ramp schedules default to point identification; a fixed one does not need it.
    pub fn new(kind: ScheduleKind, t_min: f64, t_max: f64, steps: usize) -> Self {
        Schedule {
            kind,
            t_min,
            t_max,
            steps,
            point_identification: !matches!(kind, ScheduleKind::Fixed),
        }
    }

    pub fn fixed(t_max: f64, steps: usize) -> Self {
        Self::new(ScheduleKind::Fixed, t_max, t_max, steps)
    }

    pub fn linear(b: f64, t_min: f64, t_max: f64, steps: usize) -> Self {
        Self::new(ScheduleKind::Linear { b }, t_min, t_max, steps)
    }

    pub fn exponential(a: f64, t_min: f64, t_max: f64, steps: usize) -> Self {
        Self::new(ScheduleKind::Exponential { a }, t_min, t_max, steps)
    }

    pub fn var_ratio(a0: f64, d: f64, t_min: f64, t_max: f64, steps: usize) -> Self {
        Self::new(ScheduleKind::VarRatio { a0, d }, t_min, t_max, steps)
    }

    pub fn with_point_identification(mut self, on: bool) -> Self {
        self.point_identification = on;
        self
    }

    pub fn with_steps(mut self, steps: usize) -> Self {
        self.steps = steps;
        self
    }

    pub fn validate(&self) -> Result<()> {
        check_range("t_min", self.t_min, self.t_min > 0.0, "T_min > 0")?;
        check_range(
            "t_max",
            self.t_max,
            self.t_max >= self.t_min,
            "T_max >= T_min",
        )?;
        if self.steps == 0 {
            return Err(Error::InvalidConfig(
                "schedule needs at least one step".into(),
            ));
        }
        match self.kind {
            ScheduleKind::Fixed => Ok(()),
            ScheduleKind::Linear { b } => check_range("b", b, b > 0.0, "b > 0"),
            ScheduleKind::Exponential { a } => check_range("a", a, a > 1.0, "a > 1"),
            ScheduleKind::VarRatio { a0, d } => {
                check_range("d", d, d >= 0.0, "d >= 0")?;
                check_range("a0", a0, a0 > 1.0, "a0 > 1")
            }
        }
    }

    /// Check the schedule against the instrument's range of `T`.
    pub fn validate_for(&self, cfg: &InterferometerConfig) -> Result<()> {
        self.validate()?;
        let tol = 1e-12 * cfg.t_max;
        if self.t_min < cfg.t_min - tol || self.t_max > cfg.t_max + tol {
            return Err(Error::InvalidConfig(format!(
                "schedule range [{:e}, {:e}] s exceeds instrument range [{:e}, {:e}] s",
                self.t_min, self.t_max, cfg.t_min, cfg.t_max
            )));
        }
        Ok(())
    }

    /// Base ramp from `T_min` up to and including the first `T_max`.
    fn ramp(&self) -> Vec<f64> {
        let (lo, hi) = (self.t_min, self.t_max);
        if hi <= lo {
            return vec![hi];
        }
        match self.kind {
            ScheduleKind::Fixed => vec![hi],
            ScheduleKind::Linear { b } => {
                let n = ((hi - lo) / b - RAMP_SLACK).ceil().max(1.0) as usize;
                (0..=n).map(|j| (hi - (n - j) as f64 * b).max(lo)).collect()
            }
            ScheduleKind::Exponential { a } => {
                let n = ((hi / lo).ln() / a.ln() - RAMP_SLACK).ceil().max(1.0) as usize;
                (0..=n)
                    .map(|j| (hi / a.powi((n - j) as i32)).max(lo))
                    .collect()
            }
            ScheduleKind::VarRatio { a0, d } => {
                // ratio into base step k (1-based, no repeat), k >= 2
                let ratio = |k: usize| a0 + (k as f64 - 2.0) * d;
                // smallest ramp length whose ratio product spans T_max / T_min
                let target = (hi / lo).ln() - RAMP_SLACK;
                let mut len = 1;
                let mut span = 0.0;
                while span < target {
                    len += 1;
                    span += ratio(len).ln();
                }
                let mut ramp = vec![hi; len];
                for j in (1..len).rev() {
                    ramp[j - 1] = ramp[j] / ratio(j + 1);
                }
                ramp.iter_mut().for_each(|t| *t = t.max(lo));
                ramp
            }
        }
    }

    /// 1-based index of the first `T_max` measurement, ignoring point identification.
    pub fn ramp_length(&self) -> usize {
        self.ramp().len()
    }

    /// The interrogation times `T_1, T_2, ...` of the run.
    pub fn build_sequence(&self) -> Result<Vec<f64>> {
        self.validate()?;
        let ramp = self.ramp();
        let mut seq: Vec<f64> = (0..self.steps)
            .map(|i| ramp.get(i).copied().unwrap_or(self.t_max))
            .collect();
        if self.point_identification {
            seq.insert(1, seq[0]);
        }
        Ok(seq)
    }

    /// Largest number of steps whose total interrogation time fits in `budget` (s).
    pub fn steps_for_budget(&self, budget: f64) -> Result<usize> {
        self.validate()?;
        let ramp = self.ramp();
        let limit = budget * (1.0 + 1e-12);
        let mut total = 0.0;
        let mut steps = 0;
        loop {
            let t = ramp.get(steps).copied().unwrap_or(self.t_max);
            let repeat = if self.point_identification && steps == 1 {
                ramp[0]
            } else {
                0.0
            };
            if total + t + repeat > limit {
                break;
            }
            total += t + repeat;
            steps += 1;
        }
        if steps == 0 {
            return Err(Error::InvalidConfig(format!(
                "budget {budget:e} s is shorter than the first interrogation"
            )));
        }
        Ok(steps)
    }
}

/// Control value that places the current estimate at mid-fringe:
/// `g_c = g_est - π / (2 n_B k_eff T²)`.
pub fn control_g_c(g_est: f64, t: f64, cfg: &InterferometerConfig) -> f64 {
    g_est - FRAC_PI_2 / cfg.phase_scale(t)
}

/// Raman chirp rate in Hz/s that realises control value `g_c`.
pub fn chirp_rate(g_c: f64, cfg: &InterferometerConfig) -> f64 {
    g_c * cfg.k_eff / TAU
}

/// Control value realised by chirp rate `alpha` (Hz/s).
pub fn g_from_chirp(alpha: f64, cfg: &InterferometerConfig) -> f64 {
    TAU * alpha / cfg.k_eff
}

/// Interrogation time and control value of the repeated first measurement.
pub fn point_identification_pair(
    schedule: &Schedule,
    after_first: &Estimate,
    cfg: &InterferometerConfig,
) -> Result<(f64, f64)> {
    if !schedule.point_identification {
        return Err(Error::PointIdentificationDisabled);
    }
    let t = schedule.build_sequence()?[0];
    Ok((t, control_g_c(after_first.g_est, t, cfg)))
}
