use std::process::Command;

use cv2x_sweep::config::{CsvLayout, Mode};
use cv2x_sweep::output::{render_metric_csvs, CSV_HEADER};
use cv2x_sweep::{emit_csv, render_csv, run_sweep, write_outputs, RunConfig, Source, SweepError};

fn quick(mode: Mode) -> RunConfig {
    let mut c = RunConfig {
        mode,
        ..RunConfig::default()
    };
    c.montecarlo.total_slots = 100_000;
    c
}

#[test]
fn analytic_rows_shrink_with_threshold() {
    let rows = run_sweep(&quick(Mode::Analytic)).unwrap();
    assert_eq!(rows.len(), 3);
    assert!(rows.iter().all(|r| r.source == Source::Analytic));
    let thresholds: Vec<f64> = rows.iter().map(|r| r.threshold).collect();
    assert_eq!(thresholds, vec![200.0, 400.0, 600.0]);
    assert!(rows
        .windows(2)
        .all(|w| w[0].active_transmitters <= w[1].active_transmitters));
}

#[test]
fn both_modes_agree_on_pdr_with_common_windows() {
    let mut c = quick(Mode::Both);
    c.montecarlo.total_slots = 1_000_000;
    c.scenario.cw_policy = cv2x_core::CwPolicy::Fixed;
    let rows = run_sweep(&c).unwrap();
    assert_eq!(rows.len(), 6);
    for pair in rows.chunks(2) {
        let (a, m) = (&pair[0], &pair[1]);
        assert_eq!((a.source, m.source), (Source::Analytic, Source::Montecarlo));
        assert_eq!(a.threshold, m.threshold);
        assert_eq!(a.active_transmitters, m.active_transmitters);
        let (pa, pm) = (a.pdr.unwrap(), m.pdr.unwrap());
        assert!(
            ((pm - pa) / pa).abs() < 0.05,
            "{} m: {pa} vs {pm}",
            a.threshold
        );
    }
}

#[test]
fn different_seeds_change_metrics_within_bounds() {
    let mut c = quick(Mode::Montecarlo);
    c.thresholds = vec![400.0];
    let first = run_sweep(&c).unwrap();
    c.montecarlo.seed = Some(7);
    let second = run_sweep(&c).unwrap();
    assert_eq!(first.len(), 1);
    assert_ne!(first[0].pdr, second[0].pdr);
    for r in first.iter().chain(&second) {
        for p in [
            r.pdr,
            r.throughput,
            r.busy_probability,
            r.collision_probability,
        ] {
            assert!((0.0..=1.0).contains(&p.unwrap()));
        }
        assert!(r.total_delay_us.unwrap() > 0.0);
    }
}

#[test]
fn nobody_authorized_gives_empty_metrics() {
    let mut c = quick(Mode::Both);
    c.thresholds = vec![1e-3];
    let rows = run_sweep(&c).unwrap();
    assert_eq!(rows.len(), 2);
    for r in &rows {
        assert_eq!(r.active_transmitters, 0);
        assert!(r.pdr.is_none() && r.throughput.is_none() && r.total_delay_us.is_none());
    }
    let csv = render_csv(&rows).unwrap();
    assert!(csv.lines().nth(1).unwrap().starts_with("0.001,0,,,,,,"));
}

#[test]
fn csv_has_header_and_one_line_per_row() {
    let rows = run_sweep(&quick(Mode::Analytic)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("out.csv");
    emit_csv(&rows, &path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().count(), 4);
    assert_eq!(text.lines().next(), Some(CSV_HEADER));

    emit_csv(&rows, &path).unwrap();
    assert_eq!(std::fs::read_to_string(&path).unwrap(), text);
}

#[test]
fn emit_csv_reports_unwritable_paths() {
    let rows = run_sweep(&quick(Mode::Analytic)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let err = emit_csv(&rows, &dir.path().join("missing/out.csv")).unwrap_err();
    assert!(matches!(err, SweepError::Io { .. }));
    assert_eq!(err.exit_code(), 4);
    assert!(matches!(
        emit_csv(&[], &dir.path().join("x.csv")),
        Err(SweepError::EmptyRows)
    ));
}

#[test]
fn per_metric_layout_writes_five_tables() {
    let mut c = quick(Mode::Both);
    c.csv_layout = CsvLayout::PerMetric;
    let outcome = cv2x_sweep::run_sweep_detailed(&c).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let written = write_outputs(&c, &outcome.rows, &outcome.montecarlo, dir.path()).unwrap();
    let names: Vec<String> = written
        .iter()
        .map(|p| p.file_name().unwrap().to_string_lossy().into_owned())
        .collect();
    assert_eq!(
        names,
        [
            "pdr.csv",
            "throughput.csv",
            "total_delay_us.csv",
            "busy_probability.csv",
            "collision_probability.csv",
            "summary.txt",
            "montecarlo.toml"
        ]
    );
    let tables = render_metric_csvs(&outcome.rows).unwrap();
    assert_eq!(
        tables[0].1.lines().next(),
        Some("threshold,active_transmitters,pdr,source")
    );

    let summary = std::fs::read_to_string(dir.path().join("summary.txt")).unwrap();
    assert!(summary.contains("cw_min = 7"));
    assert!(summary.contains("montecarlo"));

    let reports: toml::Table =
        toml::from_str(&std::fs::read_to_string(dir.path().join("montecarlo.toml")).unwrap())
            .unwrap();
    let runs = reports["run"].as_array().unwrap();
    assert_eq!(runs.len(), 3);
    assert_eq!(
        runs[0]["report"]["rng_algorithm"].as_str(),
        Some("ChaCha8Rng")
    );
}

fn cli(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_cv2x-sweep"))
        .args(args)
        .output()
        .unwrap()
}

#[test]
fn cli_exit_codes_distinguish_failures() {
    let dir = tempfile::tempdir().unwrap();
    let write = |name: &str, text: &str| {
        let p = dir.path().join(name);
        std::fs::write(&p, text).unwrap();
        p.to_string_lossy().into_owned()
    };
    let bad_syntax = write("a.toml", "mode = both\n");
    let bad_value = write("b.toml", "thresholds = [-5]\n");
    let blocked = write("blocker", "");

    assert_eq!(cli(&["--config", &bad_syntax]).status.code(), Some(2));
    assert_eq!(cli(&["--config", &bad_value]).status.code(), Some(3));
    let missing = dir.path().join("nope.toml");
    assert_eq!(
        cli(&["--config", &missing.to_string_lossy()]).status.code(),
        Some(4)
    );
    let out = cli(&["--mode", "analytic", "--out", &format!("{blocked}/sub")]);
    assert_eq!(out.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error:"));
}

#[test]
fn cli_overrides_apply() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let status = cli(&[
        "--mode",
        "analytic",
        "--seed",
        "3",
        "--split-csv",
        "--out",
        &out.to_string_lossy(),
    ]);
    assert!(status.status.success());
    let pdr = std::fs::read_to_string(out.join("pdr.csv")).unwrap();
    assert_eq!(pdr.lines().count(), 4);
    assert!(pdr.lines().skip(1).all(|l| l.ends_with(",analytic")));
    assert!(!out.join("montecarlo.toml").exists());
    let summary = std::fs::read_to_string(out.join("summary.txt")).unwrap();
    assert!(summary.contains("seed = 3"));
}
