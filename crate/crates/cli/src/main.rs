use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use bge_core::frequentist::{conventional_estimate, pre_estimate};
use bge_core::harness::compare::default_plan;
use bge_core::harness::config::{Axis, RunConfig};
use bge_core::harness::output::{
    sci, write_compare_csv, write_sweep_csv, write_table_json, write_trace_csv, CompareTable,
    FittedExponents, RatioEntry, Summary,
};
use bge_core::harness::sweep::run_sweep_traces;
use bge_core::harness::{
    compare_protocols, preset, run_bge, scaling_experiment, CompareOptions, PRESET_NAMES,
};
use bge_core::oracle::{frequentist_shot_precision, posterior_sigma, scaling_law};
use bge_core::parallel::Execution;
use bge_core::rng::{repetition_seed, Stream};

#[derive(Parser)]
#[command(
    name = "bge",
    version,
    about = "Adaptive Bayesian gravity estimation simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Single estimation trace.
    Run(Common),
    /// Repetitions over a parameter grid.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Axis to sweep; overrides the config's `[sweep]` table.
        #[arg(long)]
        axis: Option<String>,
        /// Comma-separated SI values for `--axis`.
        #[arg(long, value_delimiter = ',')]
        values: Vec<f64>,
    },
    /// Noise-free precision-scaling run with fitted exponents.
    Scaling(Common),
    /// Bayesian versus conventional protocol at equal total interrogation time.
    Compare {
        #[command(flatten)]
        common: Common,
        /// Comma-separated phase-noise grid in m/s²; overrides the config.
        #[arg(long, value_delimiter = ',')]
        sigma_g: Vec<f64>,
        /// Conventional shots at T_max; overrides the config.
        #[arg(long)]
        shots: Option<usize>,
        /// Add the fringe-scan time to the shared budget.
        #[arg(long)]
        include_pre_estimation: bool,
    },
    /// Print the analytic predictions for a config.
    Oracle(Common),
    /// List the shipped presets.
    Presets,
}

#[derive(Args)]
struct Common {
    /// TOML run configuration.
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Name of a shipped preset.
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory, created if missing.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Run repetitions on the calling thread.
    #[arg(long)]
    sequential: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

impl Common {
    fn load(&self) -> Result<RunConfig> {
        let mut config = match (&self.config, &self.preset) {
            (Some(path), None) => {
                RunConfig::from_path(path).with_context(|| format!("reading {}", path.display()))?
            }
            (None, Some(name)) => preset(name)?,
            _ => bail!("give either --config <file> or --preset <name>"),
        };
        if let Some(seed) = self.seed {
            config.seed = seed;
        }
        if let Some(reps) = self.reps {
            config.repetitions = reps;
        }
        config.validate()?;
        fs::create_dir_all(&self.out)
            .with_context(|| format!("creating {}", self.out.display()))?;
        Ok(config)
    }

    fn exec(&self) -> Execution {
        if self.sequential {
            Execution::Sequential
        } else {
            Execution::Parallel
        }
    }

    fn create(&self, name: &str) -> Result<BufWriter<File>> {
        let path = self.out.join(name);
        let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        Ok(BufWriter::new(file))
    }

    fn table_name(&self, stem: &str) -> String {
        match self.format {
            Format::Csv => format!("{stem}.csv"),
            Format::Json => format!("{stem}.json"),
        }
    }
}

fn write_summary(common: &Common, summary: &Summary) -> Result<()> {
    let mut w = common.create("summary.json")?;
    summary.write(&mut w)?;
    w.flush()?;
    Ok(())
}

fn finish(mut w: BufWriter<File>, out: &Path, name: &str) -> Result<()> {
    w.flush()?;
    eprintln!("wrote {}", out.join(name).display());
    Ok(())
}

fn cmd_run(common: &Common) -> Result<()> {
    let config = common.load()?;
    let hash = config.hash();
    let mut summary = Summary::new(&config, "run");
    if config.protocol.runs_bge() {
        let trace = run_bge(&config)?;
        let name = common.table_name("trace");
        let mut w = common.create(&name)?;
        match common.format {
            Format::Csv => write_trace_csv(&mut w, &hash, &trace)?,
            Format::Json => write_table_json(&mut w, &hash, &trace.rows)?,
        }
        finish(w, &common.out, &name)?;
        if let Some(last) = trace.last() {
            summary.final_g_est = Some(last.g_est);
            summary.final_dg_est = Some(last.dg_est);
        }
        summary.reliable_fraction = Some(if trace.reliable { 1.0 } else { 0.0 });
        if let Some(reason) = &trace.failure {
            eprintln!("run stopped early: {reason}");
        }
    }
    if config.protocol.runs_frequentist() {
        let cfg = &config.interferometer;
        let plan = default_plan(&config);
        let pre_seed = repetition_seed(config.seed, Stream::PreEstimation, 0);
        let pre = pre_estimate(
            cfg,
            config.g_true,
            config.prior_center,
            &config.noise,
            &plan,
            pre_seed,
        )?;
        let shots = config.compare.as_ref().map_or(40, |c| c.frequentist_shots);
        let seed = repetition_seed(config.seed, Stream::Frequentist, 0);
        let conv =
            conventional_estimate(cfg, config.g_true, pre.g_pre, &config.noise, shots, seed)?;
        println!(
            "conventional: g_est {} dg_est {} ({} shots, {} clipped, {} scan shots)",
            sci(conv.g_est),
            sci(conv.dg_est),
            shots,
            conv.clipped_count(),
            pre.shots
        );
    }
    write_summary(common, &summary)
}

fn cmd_sweep(common: &Common, axis: &Option<String>, values: &[f64]) -> Result<()> {
    let config = common.load()?;
    let (axis, values) = match (axis, &config.sweep) {
        (Some(name), _) => (Axis::parse(name)?, values.to_vec()),
        (None, Some(spec)) => (spec.axis, spec.values.clone()),
        (None, None) => bail!("no sweep axis: pass --axis or add a [sweep] table"),
    };
    let runs = run_sweep_traces(&config, axis, &values, common.exec())?;
    let rows = runs.rows();
    let hash = config.hash();
    let name = common.table_name("sweep");
    let mut w = common.create(&name)?;
    match common.format {
        Format::Csv => write_sweep_csv(&mut w, &hash, axis, &rows)?,
        Format::Json => write_table_json(&mut w, &hash, &rows)?,
    }
    finish(w, &common.out, &name)?;
    let mut summary = Summary::new(&config, "sweep");
    let total: usize = runs.cells.iter().map(|(_, t)| t.len()).sum();
    if total > 0 {
        let reliable: usize = runs
            .cells
            .iter()
            .map(|(_, t)| t.iter().filter(|r| r.reliable).count())
            .sum();
        summary.reliable_fraction = Some(reliable as f64 / total as f64);
    }
    write_summary(common, &summary)
}

fn cmd_scaling(common: &Common) -> Result<()> {
    let config = common.load()?;
    let report = scaling_experiment(&config)?;
    let hash = config.hash();
    let name = common.table_name("trace");
    let mut w = common.create(&name)?;
    match common.format {
        Format::Csv => write_trace_csv(&mut w, &hash, &report.trace)?,
        Format::Json => write_table_json(&mut w, &hash, &report.trace.rows)?,
    }
    finish(w, &common.out, &name)?;
    let mut summary = Summary::new(&config, "scaling");
    summary.fitted_exponents = FittedExponents {
        ramp: report.ramp_fit,
        plateau: report.plateau_fit,
    };
    summary.predicted = Some(report.law);
    if let Some(last) = report.trace.last() {
        summary.final_g_est = Some(last.g_est);
        summary.final_dg_est = Some(last.dg_est);
    }
    summary.reliable_fraction = Some(if report.trace.reliable { 1.0 } else { 0.0 });
    for (label, fit) in [("ramp", &report.ramp_fit), ("plateau", &report.plateau_fit)] {
        if let Some(f) = fit {
            println!(
                "{label} slope {:.4} (r2 {:.5}, {} points)",
                f.slope, f.r2, f.points
            );
        }
    }
    write_summary(common, &summary)
}

fn cmd_compare(
    common: &Common,
    sigma_g: &[f64],
    shots: Option<usize>,
    include_pre_estimation: bool,
) -> Result<()> {
    let config = common.load()?;
    let spec = config.compare.clone();
    let grid = if !sigma_g.is_empty() {
        sigma_g.to_vec()
    } else if let Some(spec) = &spec {
        spec.sigma_g.clone()
    } else {
        vec![config.noise.phase_sigma_g]
    };
    let options = CompareOptions {
        frequentist_shots: shots
            .or(spec.as_ref().map(|s| s.frequentist_shots))
            .unwrap_or(CompareOptions::default().frequentist_shots),
        include_pre_estimation: include_pre_estimation
            || spec.as_ref().is_some_and(|s| s.include_pre_estimation),
    };

    // a config with a sweep axis repeats the comparison at every axis value
    let cells: Vec<(f64, RunConfig)> = match &config.sweep {
        Some(sweep) => sweep
            .values
            .iter()
            .map(|&v| Ok((v, config.with_axis(sweep.axis, v)?)))
            .collect::<Result<_>>()?,
        None => vec![(f64::NAN, config.clone())],
    };
    let mut table = CompareTable {
        axis: config.sweep.as_ref().map(|s| s.axis),
        rows: Vec::new(),
    };
    for (v, cell) in &cells {
        for row in compare_protocols(cell, &grid, options, common.exec())? {
            table.rows.push((*v, row));
        }
    }

    let hash = config.hash();
    let name = common.table_name("compare");
    let mut w = common.create(&name)?;
    match common.format {
        Format::Csv => write_compare_csv(&mut w, &hash, &table)?,
        Format::Json => write_table_json(&mut w, &hash, &table)?,
    }
    finish(w, &common.out, &name)?;
    let mut summary = Summary::new(&config, "compare");
    summary.improvement_ratios = table
        .rows
        .iter()
        .map(|(v, r)| RatioEntry {
            axis_value: *v,
            sigma_g: r.sigma_g,
            ratio: r.ratio,
        })
        .collect();
    for e in &summary.improvement_ratios {
        println!(
            "axis {} sigma_g {} ratio {:.3}",
            sci(e.axis_value),
            sci(e.sigma_g),
            e.ratio
        );
    }
    write_summary(common, &summary)
}

fn cmd_oracle(common: &Common) -> Result<()> {
    let config = common.load()?;
    let cfg = &config.interferometer;
    let times = config.schedule.build_sequence()?;
    let law = scaling_law(&config.schedule, cfg)?;
    let sigma = posterior_sigma(cfg, &times)? / cfg.contrast;
    let shot = frequentist_shot_precision(cfg, cfg.t_max, std::f64::consts::FRAC_PI_2)?;
    let t_tilde: f64 = times.iter().sum();
    println!("config         {} ({})", config.name, config.hash());
    println!("measurements   {}", times.len());
    println!("total time     {} s", sci(t_tilde));
    println!("final sigma    {} m/s^2", sci(sigma));
    println!(
        "ramp law       dg = {} * T^{} for T in [{}, {}] s",
        sci(law.ramp.prefactor),
        law.ramp.exponent,
        sci(law.ramp.valid_from),
        sci(law.ramp.valid_to)
    );
    println!(
        "plateau law    dg = {} * T^{} for T >= {} s",
        sci(law.plateau.prefactor),
        law.plateau.exponent,
        sci(law.plateau.valid_from)
    );
    println!("mid-fringe shot at T_max  {} m/s^2", sci(shot));
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Run(common) => cmd_run(&common),
        Command::Sweep {
            common,
            axis,
            values,
        } => cmd_sweep(&common, &axis, &values),
        Command::Scaling(common) => cmd_scaling(&common),
        Command::Compare {
            common,
            sigma_g,
            shots,
            include_pre_estimation,
        } => cmd_compare(&common, &sigma_g, shots, include_pre_estimation),
        Command::Oracle(common) => cmd_oracle(&common),
        Command::Presets => {
            for name in PRESET_NAMES {
                println!("{name}");
            }
            Ok(())
        }
    }
}
