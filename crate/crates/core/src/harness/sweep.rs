//! Monte Carlo repetitions and one-parameter sweeps.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::harness::config::{Axis, RunConfig};
use crate::harness::run::{run_bge_rep, EstimationTrace};
use crate::harness::stats::{mean, sample_std};
use crate::parallel::{map, Execution};

/// All repetitions of `config`, in repetition order.
pub fn run_repetitions(config: &RunConfig, exec: Execution) -> Result<Vec<EstimationTrace>> {
    config.validate()?;
    map((0..config.repetitions).collect(), exec, |rep| {
        run_bge_rep(config, rep)
    })
    .into_iter()
    .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub axis_value: f64,
    pub mean_error: f64,
    pub error_std: f64,
    pub mean_dg: f64,
    pub reliable_fraction: f64,
}

impl SweepRow {
    /// Aggregate final errors and widths of a set of runs.
    pub fn from_traces(axis_value: f64, traces: &[EstimationTrace]) -> SweepRow {
        let errors: Vec<f64> = traces.iter().map(EstimationTrace::final_error).collect();
        let dgs: Vec<f64> = traces.iter().map(EstimationTrace::final_dg).collect();
        let reliable = traces.iter().filter(|t| t.reliable).count();
        SweepRow {
            axis_value,
            mean_error: mean(&errors),
            error_std: sample_std(&errors),
            mean_dg: mean(&dgs),
            reliable_fraction: reliable as f64 / traces.len() as f64,
        }
    }
}

/// Runs of a sweep, grouped per axis value.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRuns {
    pub axis: Axis,
    pub cells: Vec<(f64, Vec<EstimationTrace>)>,
}

impl SweepRuns {
    pub fn rows(&self) -> Vec<SweepRow> {
        self.cells
            .iter()
            .map(|(v, traces)| SweepRow::from_traces(*v, traces))
            .collect()
    }
}

/// Every `(value, repetition)` cell of a sweep.
///
/// Repetition `r` uses the same random stream for every value, so cells
/// differ only through the swept parameter.
pub fn run_sweep_traces(
    base: &RunConfig,
    axis: Axis,
    values: &[f64],
    exec: Execution,
) -> Result<SweepRuns> {
    let configs: Vec<RunConfig> = values
        .iter()
        .map(|&v| base.with_axis(axis, v))
        .collect::<Result<_>>()?;
    let reps = base.repetitions;
    let jobs: Vec<(usize, usize)> = (0..configs.len())
        .flat_map(|c| (0..reps).map(move |r| (c, r)))
        .collect();
    let mut results = map(jobs, exec, |(c, r)| run_bge_rep(&configs[c], r)).into_iter();
    let mut cells = Vec::with_capacity(values.len());
    for &v in values {
        let traces = results.by_ref().take(reps).collect::<Result<Vec<_>>>()?;
        cells.push((v, traces));
    }
    Ok(SweepRuns { axis, cells })
}

/// Summary table of [`run_sweep_traces`].
pub fn run_sweep(
    base: &RunConfig,
    axis: Axis,
    values: &[f64],
    exec: Execution,
) -> Result<Vec<SweepRow>> {
    Ok(run_sweep_traces(base, axis, values, exec)?.rows())
}
