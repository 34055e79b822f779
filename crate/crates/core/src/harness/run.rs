//! The adaptive estimation loop.

use serde::{Deserialize, Serialize};

use crate::bayes::{bayes_update, init_uniform, regrid, Estimate};
use crate::error::{Error, Result};
use crate::harness::config::RunConfig;
use crate::physics::simulate_shot;
use crate::rng::{repetition_seed, step_rng, Stream};
use crate::schedule::control_g_c;

/// One measurement of a run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub step: usize,
    pub t: f64,
    pub t_tilde: f64,
    pub g_c: f64,
    pub p_e: f64,
    pub g_est: f64,
    pub dg_est: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimationTrace {
    pub rows: Vec<TraceRow>,
    pub g_true: f64,
    /// False when the run stopped on a collapsed posterior.
    pub reliable: bool,
    /// Reason the run stopped early.
    pub failure: Option<String>,
}

impl EstimationTrace {
    pub fn last(&self) -> Option<&TraceRow> {
        self.rows.last()
    }

    /// `g_est − g_true` after the last completed step.
    pub fn final_error(&self) -> f64 {
        self.last().map_or(f64::NAN, |r| r.g_est - self.g_true)
    }

    pub fn final_dg(&self) -> f64 {
        self.last().map_or(f64::NAN, |r| r.dg_est)
    }

    /// `(T̃_i, Δg_i)` for every row.
    pub fn scaling_points(&self) -> Vec<(f64, f64)> {
        self.rows.iter().map(|r| (r.t_tilde, r.dg_est)).collect()
    }
}

/// Seed of repetition `rep` of the Bayesian protocol.
pub fn bge_seed(config: &RunConfig, rep: usize) -> u64 {
    repetition_seed(config.seed, Stream::Bayesian, rep as u64)
}

/// Repetition 0 of `config`.
pub fn run_bge(config: &RunConfig) -> Result<EstimationTrace> {
    run_bge_rep(config, 0)
}

pub fn run_bge_rep(config: &RunConfig, rep: usize) -> Result<EstimationTrace> {
    config.validate()?;
    let times = config.schedule.build_sequence()?;
    run_bge_with(config, &times, bge_seed(config, rep))
}

/// Run the loop over explicit interrogation times.
pub fn run_bge_with(config: &RunConfig, times: &[f64], seed: u64) -> Result<EstimationTrace> {
    let cfg = &config.interferometer;
    let first = *times
        .first()
        .ok_or(Error::InvalidConfig("empty schedule".into()))?;
    let mut post = init_uniform(config.prior_center, first, cfg)?;
    let mut est = post.estimate();
    est.g_est = config.prior_center;

    let mut rows = Vec::with_capacity(times.len());
    let mut t_tilde = 0.0;
    let mut failure = None;
    for (i, &t) in times.iter().enumerate() {
        if i > 0 {
            post = match regrid(post, &est, t, cfg) {
                Ok(p) => p,
                Err(e) => {
                    failure = Some(e.to_string());
                    break;
                }
            };
        }
        let g_c = control_g_c(est.g_est, t, cfg);
        let mut rng = step_rng(seed, i as u64);
        let shot = simulate_shot(cfg, config.g_true, g_c, t, &config.noise, &mut rng);
        post = match bayes_update(post, shot.p_e, g_c, t, cfg) {
            Ok(p) => p,
            Err(e @ Error::PosteriorCollapse { .. }) => {
                failure = Some(e.to_string());
                break;
            }
            Err(e) => return Err(e),
        };
        est = post.estimate();
        t_tilde += t;
        rows.push(TraceRow {
            step: i + 1,
            t,
            t_tilde,
            g_c,
            p_e: shot.p_e,
            g_est: est.g_est,
            dg_est: est.dg_est,
        });
    }
    Ok(EstimationTrace {
        rows,
        g_true: config.g_true,
        reliable: failure.is_none(),
        failure,
    })
}

/// Final estimate of a trace, if any step completed.
pub fn final_estimate(trace: &EstimationTrace) -> Option<Estimate> {
    trace.last().map(|r| Estimate {
        g_est: r.g_est,
        dg_est: r.dg_est,
    })
}
