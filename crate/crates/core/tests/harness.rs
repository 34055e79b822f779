use bge_core::harness::config::{Axis, RunConfig};
use bge_core::harness::output::*;
use bge_core::harness::sweep::run_sweep_traces;
use bge_core::harness::*;
use bge_core::parallel::Execution;
use bge_core::physics::MICRO_GAL;
use bge_core::schedule::ScheduleKind;
use bge_core::Error;

const SMALL: &str = r#"
name = "small"
seed = 17
repetitions = 4
g_true_m_s2 = 9.7963
prior_offset_periods = 0.15

[interferometer]
k_eff_per_m = 1.61e7
contrast = 0.15
atoms = 5e7
t_min_s = 0.0054
t_max_s = 0.05

[noise]
phase_sigma_ugal = 0.4

[schedule]
kind = "exponential"
a = 1.25
steps = 12

[sweep]
axis = "sigma_g"
values_ugal = [0.0, 0.5]
"#;

fn small() -> RunConfig {
    RunConfig::from_toml_str(SMALL).unwrap()
}

#[test]
fn parses_config_and_converts_microgal() {
    let c = small();
    assert_eq!(c.name, "small");
    assert_eq!(c.repetitions, 4);
    assert!((c.noise.phase_sigma_g - 0.4 * MICRO_GAL).abs() < 1e-24);
    assert_eq!(c.schedule.kind, ScheduleKind::Exponential { a: 1.25 });
    assert!(c.schedule.point_identification);
    assert_eq!(c.interferometer.bragg_order, 1);
    let sweep = c.sweep.as_ref().unwrap();
    assert_eq!(sweep.axis, Axis::PhaseSigmaG);
    assert_eq!(sweep.values, vec![0.0, 0.5e-8]);
    assert!(c.prior_covers_truth().unwrap());
    let period = 2.0 * c.initial_half_width().unwrap();
    assert!(((c.prior_center - c.g_true) / period - 0.15).abs() < 1e-9);
}

#[test]
fn rejects_bad_configs() {
    let unknown_axis = SMALL.replace("axis = \"sigma_g\"", "axis = \"temperature\"");
    assert!(matches!(
        RunConfig::from_toml_str(&unknown_axis),
        Err(Error::UnknownAxis(_))
    ));
    let unknown_key = SMALL.replace("seed = 17", "seed = 17\ncolour = 3");
    assert!(matches!(
        RunConfig::from_toml_str(&unknown_key),
        Err(Error::Parse(_))
    ));
    let bad_kind = SMALL.replace("kind = \"exponential\"", "kind = \"quadratic\"");
    assert!(RunConfig::from_toml_str(&bad_kind).is_err());
    let bad_contrast = SMALL.replace("contrast = 0.15", "contrast = 1.5");
    assert!(RunConfig::from_toml_str(&bad_contrast).is_err());
    assert!(matches!(Axis::parse("nope"), Err(Error::UnknownAxis(_))));
    assert!(matches!(preset("fig9"), Err(Error::UnknownPreset(_))));
}

#[test]
fn axis_names_round_trip() {
    for name in [
        "depolarization",
        "phase_sigma_g",
        "atoms",
        "bragg_order",
        "contrast",
    ] {
        assert_eq!(Axis::parse(name).unwrap().name(), name);
    }
    assert_eq!(Axis::parse("p_d").unwrap(), Axis::Depolarization);
    assert_eq!(Axis::parse("n_B").unwrap(), Axis::BraggOrder);
}

#[test]
fn hash_tracks_content() {
    let a = small();
    let mut b = small();
    assert_eq!(a.hash(), b.hash());
    assert_eq!(a.hash().len(), 64);
    b.seed += 1;
    assert_ne!(a.hash(), b.hash());
}

#[test]
fn every_preset_loads() {
    assert_eq!(PRESET_NAMES.len(), 12);
    for name in PRESET_NAMES {
        let c = preset(name).unwrap();
        assert_eq!(c.name, *name);
        c.validate().unwrap();
    }
}

#[test]
fn single_repetition_sweep_equals_direct_run() {
    let mut c = small();
    c.repetitions = 1;
    let runs = run_sweep_traces(
        &c,
        Axis::PhaseSigmaG,
        &[0.4 * MICRO_GAL],
        Execution::Sequential,
    )
    .unwrap();
    let direct = run_bge(&c).unwrap();
    assert_eq!(runs.cells[0].1[0], direct);
    let row = &runs.rows()[0];
    assert_eq!(row.mean_error, direct.final_error());
    assert_eq!(row.mean_dg, direct.final_dg());
}

#[test]
fn empty_sweep_is_empty() {
    let rows = run_sweep(&small(), Axis::Depolarization, &[], Execution::Parallel).unwrap();
    assert!(rows.is_empty());
}

#[test]
fn replay_is_byte_identical() {
    let c = small();
    let render = || {
        let trace = run_bge(&c).unwrap();
        let mut buf = Vec::new();
        write_trace_csv(&mut buf, &c.hash(), &trace).unwrap();
        buf
    };
    assert_eq!(render(), render());
}

#[test]
fn parallel_matches_sequential() {
    let c = small();
    let values = c.sweep.as_ref().unwrap().values.clone();
    let par = run_sweep(&c, Axis::PhaseSigmaG, &values, Execution::Parallel).unwrap();
    let seq = run_sweep(&c, Axis::PhaseSigmaG, &values, Execution::Sequential).unwrap();
    assert_eq!(par, seq);
    let reps_par = run_repetitions(&c, Execution::Parallel).unwrap();
    let reps_seq = run_repetitions(&c, Execution::Sequential).unwrap();
    assert_eq!(reps_par, reps_seq);
}

#[test]
fn repetitions_differ() {
    let traces = run_repetitions(&small(), Execution::Parallel).unwrap();
    assert_eq!(traces.len(), 4);
    assert_ne!(traces[0].rows, traces[1].rows);
}

#[test]
fn trace_csv_schema() {
    let c = small();
    let trace = run_bge(&c).unwrap();
    let mut buf = Vec::new();
    write_trace_csv(&mut buf, &c.hash(), &trace).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        format!("# config_hash: {}", c.hash())
    );
    assert_eq!(
        lines.next().unwrap(),
        "step,T_i,T_tilde,g_c,P_e,g_est,dg_est"
    );
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), trace.rows.len());
    assert_eq!(rows.len(), 13);
    for (line, row) in rows.iter().zip(&trace.rows) {
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields.len(), 7);
        assert_eq!(fields[0].parse::<usize>().unwrap(), row.step);
        assert_eq!(fields[5].parse::<f64>().unwrap(), row.g_est);
        assert_eq!(fields[6].parse::<f64>().unwrap(), row.dg_est);
    }
}

#[test]
fn sweep_csv_schema() {
    let c = small();
    let rows = run_sweep(&c, Axis::PhaseSigmaG, &[0.0, 5e-9], Execution::Parallel).unwrap();
    let mut buf = Vec::new();
    write_sweep_csv(&mut buf, &c.hash(), Axis::PhaseSigmaG, &rows).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].starts_with("# config_hash: "));
    assert_eq!(lines[1], "# axis: phase_sigma_g");
    assert_eq!(lines[2], SWEEP_COLUMNS.join(","));
    assert_eq!(lines.len(), 5);
    assert_eq!(
        lines[4].split(',').next().unwrap().parse::<f64>().unwrap(),
        5e-9
    );
}

#[test]
fn trace_rows_are_consistent() {
    let trace = run_bge(&small()).unwrap();
    let mut total = 0.0;
    for (i, r) in trace.rows.iter().enumerate() {
        assert_eq!(r.step, i + 1);
        total += r.t;
        assert!((r.t_tilde - total).abs() < 1e-12);
        assert!(r.p_e > 0.0 && r.p_e < 1.0);
        assert!(r.dg_est > 0.0);
    }
    assert_eq!(trace.rows[0].t, trace.rows[1].t);
}

#[test]
fn summary_has_every_key() {
    let s = output::Summary::new(&small(), "run");
    let mut buf = Vec::new();
    s.write(&mut buf).unwrap();
    let v: serde_json::Value = serde_json::from_slice(&buf).unwrap();
    for key in [
        "config_hash",
        "name",
        "command",
        "seed",
        "repetitions",
        "fitted_exponents",
        "predicted",
        "improvement_ratios",
        "final_g_est",
        "final_dg_est",
        "reliable_fraction",
    ] {
        assert!(v.get(key).is_some(), "{key}");
    }
}

#[test]
fn json_table_carries_hash() {
    let mut buf = Vec::new();
    write_table_json(&mut buf, "abc", &vec![1.0, 2.0]).unwrap();
    let v: serde_json::Value = serde_json::from_slice(&buf).unwrap();
    assert_eq!(v["config_hash"], "abc");
    assert_eq!(v["rows"].as_array().unwrap().len(), 2);
}

#[test]
fn compare_runs_on_a_small_config() {
    let mut c = small();
    c.interferometer.contrast = 0.16;
    c.repetitions = 3;
    let rows = compare_protocols(
        &c,
        &[0.0, 2e-8],
        CompareOptions::default(),
        Execution::Parallel,
    )
    .unwrap();
    assert_eq!(rows.len(), 2);
    for r in &rows {
        assert_eq!(r.frequentist_shots, 40);
        assert!(r.bge_shots > 0);
        assert!(r.ratio.is_finite() && r.ratio > 0.0);
        assert_eq!(r.pre_estimation_failures, 0);
    }
    let table = CompareTable {
        axis: None,
        rows: rows.iter().map(|r| (f64::NAN, *r)).collect(),
    };
    let mut buf = Vec::new();
    write_compare_csv(&mut buf, &c.hash(), &table).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().nth(1).unwrap(), COMPARE_COLUMNS.join(","));
    assert!(text.lines().nth(2).unwrap().starts_with("NaN,0e0,"));
}

#[test]
fn scaling_report_on_fixed_schedule() {
    let report = scaling_experiment(&preset("fig2-fixed").unwrap()).unwrap();
    let fit = report.ramp_fit.as_ref().unwrap();
    assert!((fit.slope + 0.5).abs() < 0.01);
    assert!(report.plateau_fit.is_none());
    assert!(report.max_oracle_deviation(3) < 0.05);
}

#[test]
fn sci_round_trips() {
    for x in [9.7963, 1.2e-10, 0.0, -3.5e7, f64::MIN_POSITIVE] {
        assert_eq!(sci(x).parse::<f64>().unwrap(), x);
    }
    assert_eq!(sci(1.5e-9), "1.5e-9");
}
