//! CSV and JSON writers with a fixed column set.
//!
//! Floats are written in shortest round-trip scientific notation. Every
//! file carries the hash of the configuration that produced it: CSV files
//! as a leading `# config_hash:` comment, JSON files as a field.

use std::io::{self, Write};

use serde::Serialize;

use crate::harness::compare::CompareRow;
use crate::harness::config::Axis;
use crate::harness::fit::PowerLawFit;
use crate::harness::run::EstimationTrace;
use crate::harness::sweep::SweepRow;
use crate::oracle::ScalingLaw;

pub const TRACE_COLUMNS: [&str; 7] = ["step", "T_i", "T_tilde", "g_c", "P_e", "g_est", "dg_est"];
pub const SWEEP_COLUMNS: [&str; 5] = [
    "axis_value",
    "mean_error",
    "error_std",
    "mean_dg",
    "reliable_fraction",
];
pub const COMPARE_COLUMNS: [&str; 13] = [
    "axis_value",
    "sigma_g",
    "bge_dg",
    "bge_error_std",
    "bge_reliable_fraction",
    "frequentist_dg",
    "frequentist_error_std",
    "frequentist_clipped_fraction",
    "ratio",
    "bge_shots",
    "frequentist_shots",
    "pre_estimation_shots",
    "pre_estimation_failures",
];

/// Shortest scientific form that parses back to the same `f64`.
pub fn sci(x: f64) -> String {
    format!("{x:e}")
}

fn header<W: Write>(w: &mut W, hash: &str, axis: Option<Axis>, columns: &[&str]) -> io::Result<()> {
    writeln!(w, "# config_hash: {hash}")?;
    if let Some(axis) = axis {
        writeln!(w, "# axis: {axis}")?;
    }
    writeln!(w, "{}", columns.join(","))
}

pub fn write_trace_csv<W: Write>(w: &mut W, hash: &str, trace: &EstimationTrace) -> io::Result<()> {
    header(w, hash, None, &TRACE_COLUMNS)?;
    for r in &trace.rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            r.step,
            sci(r.t),
            sci(r.t_tilde),
            sci(r.g_c),
            sci(r.p_e),
            sci(r.g_est),
            sci(r.dg_est)
        )?;
    }
    Ok(())
}

pub fn write_sweep_csv<W: Write>(
    w: &mut W,
    hash: &str,
    axis: Axis,
    rows: &[SweepRow],
) -> io::Result<()> {
    header(w, hash, Some(axis), &SWEEP_COLUMNS)?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{}",
            sci(r.axis_value),
            sci(r.mean_error),
            sci(r.error_std),
            sci(r.mean_dg),
            sci(r.reliable_fraction)
        )?;
    }
    Ok(())
}

/// A comparison table, optionally repeated along a sweep axis.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CompareTable {
    pub axis: Option<Axis>,
    /// `(axis value, row)`; the value is NaN without an axis.
    pub rows: Vec<(f64, CompareRow)>,
}

pub fn write_compare_csv<W: Write>(w: &mut W, hash: &str, table: &CompareTable) -> io::Result<()> {
    header(w, hash, table.axis, &COMPARE_COLUMNS)?;
    for (v, r) in &table.rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            sci(*v),
            sci(r.sigma_g),
            sci(r.bge_dg),
            sci(r.bge_error_std),
            sci(r.bge_reliable_fraction),
            sci(r.frequentist_dg),
            sci(r.frequentist_error_std),
            sci(r.frequentist_clipped_fraction),
            sci(r.ratio),
            r.bge_shots,
            r.frequentist_shots,
            r.pre_estimation_shots,
            r.pre_estimation_failures
        )?;
    }
    Ok(())
}

/// JSON form of any table: `{"config_hash": ..., "rows": [...]}`.
pub fn write_table_json<W: Write, T: Serialize>(w: &mut W, hash: &str, rows: &T) -> io::Result<()> {
    #[derive(Serialize)]
    struct Table<'a, T> {
        config_hash: &'a str,
        rows: &'a T,
    }
    serde_json::to_writer_pretty(
        &mut *w,
        &Table {
            config_hash: hash,
            rows,
        },
    )?;
    writeln!(w)
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct FittedExponents {
    pub ramp: Option<PowerLawFit>,
    pub plateau: Option<PowerLawFit>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RatioEntry {
    pub axis_value: f64,
    pub sigma_g: f64,
    pub ratio: f64,
}

/// Contents of `summary.json`. Every key is always present.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Summary {
    pub config_hash: String,
    pub name: String,
    pub command: String,
    pub seed: u64,
    pub repetitions: usize,
    pub fitted_exponents: FittedExponents,
    pub predicted: Option<ScalingLaw>,
    pub improvement_ratios: Vec<RatioEntry>,
    pub final_g_est: Option<f64>,
    pub final_dg_est: Option<f64>,
    pub reliable_fraction: Option<f64>,
}

impl Summary {
    pub fn new(config: &crate::harness::config::RunConfig, command: &str) -> Self {
        Summary {
            config_hash: config.hash(),
            name: config.name.clone(),
            command: command.to_string(),
            seed: config.seed,
            repetitions: config.repetitions,
            fitted_exponents: FittedExponents::default(),
            predicted: None,
            improvement_ratios: Vec::new(),
            final_g_est: None,
            final_dg_est: None,
            reliable_fraction: None,
        }
    }

    pub fn write<W: Write>(&self, w: &mut W) -> io::Result<()> {
        serde_json::to_writer_pretty(&mut *w, self)?;
        writeln!(w)
    }
}
