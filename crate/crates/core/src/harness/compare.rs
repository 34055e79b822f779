//! Bayesian versus conventional protocol at equal total interrogation time.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frequentist::{conventional_estimate, pre_estimate, PreEstimationPlan};
use crate::harness::config::RunConfig;
use crate::harness::run::{bge_seed, run_bge_with};
use crate::harness::stats::{mean, sample_std};
use crate::parallel::{map, Execution};
use crate::rng::{repetition_seed, Stream};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompareOptions {
    pub frequentist_shots: usize,
    pub include_pre_estimation: bool,
}

impl Default for CompareOptions {
    fn default() -> Self {
        CompareOptions {
            frequentist_shots: 40,
            include_pre_estimation: false,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompareRow {
    pub sigma_g: f64,
    /// Mean final posterior width.
    pub bge_dg: f64,
    pub bge_error_std: f64,
    pub bge_reliable_fraction: f64,
    /// Mean `sample std / √M` of the conventional runs.
    pub frequentist_dg: f64,
    pub frequentist_error_std: f64,
    pub frequentist_clipped_fraction: f64,
    /// `frequentist_dg / bge_dg`.
    pub ratio: f64,
    pub bge_shots: usize,
    pub frequentist_shots: usize,
    pub pre_estimation_shots: usize,
    /// Repetitions whose fringe scans did not give a unique minimum.
    pub pre_estimation_failures: usize,
}

/// Pre-estimation plan used by the comparison: the schedule's `T_min`,
/// limited so that the `4 T` scan still fits under `T_max`.
pub fn default_plan(config: &RunConfig) -> PreEstimationPlan {
    let t_base = config
        .schedule
        .t_min
        .min(0.25 * config.interferometer.t_max);
    PreEstimationPlan::new(t_base)
}

struct RepOutcome {
    bge_dg: f64,
    bge_error: f64,
    bge_reliable: bool,
    freq_dg: f64,
    freq_error: f64,
    clipped: usize,
    pre_failed: bool,
}

/// One table row per phase-noise level, `config.repetitions` runs each.
pub fn compare_protocols(
    config: &RunConfig,
    sigma_g_grid: &[f64],
    options: CompareOptions,
    exec: Execution,
) -> Result<Vec<CompareRow>> {
    config.validate()?;
    let cfg = &config.interferometer;
    let plan = default_plan(config);
    let m = options.frequentist_shots;
    let (plan_shots, plan_time) = plan.cost(cfg);
    let mut budget = m as f64 * cfg.t_max;
    if options.include_pre_estimation {
        budget += plan_time;
    }
    let steps = config.schedule.steps_for_budget(budget)?;
    let schedule = config.schedule.with_steps(steps);
    let times = schedule.build_sequence()?;

    let configs: Vec<RunConfig> = sigma_g_grid
        .iter()
        .map(|&s| {
            let mut c = config.clone();
            c.noise.phase_sigma_g = s;
            c.schedule = schedule;
            c.validate().map(|_| c)
        })
        .collect::<Result<_>>()?;
    let reps = config.repetitions;
    let jobs: Vec<(usize, usize)> = (0..configs.len())
        .flat_map(|c| (0..reps).map(move |r| (c, r)))
        .collect();

    let outcomes = map(jobs, exec, |(c, rep)| -> Result<RepOutcome> {
        let run = &configs[c];
        let trace = run_bge_with(run, &times, bge_seed(run, rep))?;
        let pre_seed = repetition_seed(run.seed, Stream::PreEstimation, rep as u64);
        let (g_pre, pre_failed) = match pre_estimate(
            cfg,
            run.g_true,
            run.prior_center,
            &run.noise,
            &plan,
            pre_seed,
        ) {
            Ok(p) => (p.g_pre, false),
            Err(Error::AmbiguousMinimum(_)) | Err(Error::FitFailed { .. }) => {
                (run.prior_center, true)
            }
            Err(e) => return Err(e),
        };
        let freq_seed = repetition_seed(run.seed, Stream::Frequentist, rep as u64);
        let conv = conventional_estimate(cfg, run.g_true, g_pre, &run.noise, m, freq_seed)?;
        Ok(RepOutcome {
            bge_dg: trace.final_dg(),
            bge_error: trace.final_error(),
            bge_reliable: trace.reliable,
            freq_dg: conv.dg_est,
            freq_error: conv.g_est - run.g_true,
            clipped: conv.clipped_count(),
            pre_failed,
        })
    });
    let outcomes: Vec<RepOutcome> = outcomes.into_iter().collect::<Result<_>>()?;

    Ok(sigma_g_grid
        .iter()
        .zip(outcomes.chunks(reps))
        .map(|(&sigma_g, cell)| {
            let pick = |f: fn(&RepOutcome) -> f64| cell.iter().map(f).collect::<Vec<f64>>();
            let bge_dg = mean(&pick(|o| o.bge_dg));
            let frequentist_dg = mean(&pick(|o| o.freq_dg));
            let clipped: usize = cell.iter().map(|o| o.clipped).sum();
            CompareRow {
                sigma_g,
                bge_dg,
                bge_error_std: sample_std(&pick(|o| o.bge_error)),
                bge_reliable_fraction: cell.iter().filter(|o| o.bge_reliable).count() as f64
                    / reps as f64,
                frequentist_dg,
                frequentist_error_std: sample_std(&pick(|o| o.freq_error)),
                frequentist_clipped_fraction: clipped as f64 / (reps * m) as f64,
                ratio: frequentist_dg / bge_dg,
                bge_shots: times.len(),
                frequentist_shots: m,
                pre_estimation_shots: plan_shots,
                pre_estimation_failures: cell.iter().filter(|o| o.pre_failed).count(),
            }
        })
        .collect())
}
