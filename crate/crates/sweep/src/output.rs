use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::config::{CsvLayout, RunConfig};
use crate::error::{Result, SweepError};
use crate::sweep::{MonteCarloRun, SweepRow};

pub const CSV_HEADER: &str = "threshold,active_transmitters,pdr,throughput,total_delay_us,busy_probability,collision_probability,source";

type Metric = (&'static str, fn(&SweepRow) -> Option<f64>);

const METRICS: [Metric; 5] = [
    ("pdr", |r| r.pdr),
    ("throughput", |r| r.throughput),
    ("total_delay_us", |r| r.total_delay_us),
    ("busy_probability", |r| r.busy_probability),
    ("collision_probability", |r| r.collision_probability),
];

/// Formats `value` with six significant digits in the style of C's `%g`.
pub fn format_number(value: f64) -> String {
    if value == 0.0 {
        return "0".to_string();
    }
    if !value.is_finite() {
        return value.to_string();
    }
    let sci = format!("{value:.5e}");
    let (mantissa, exponent) = sci.split_once('e').expect("exponent marker");
    let exponent: i32 = exponent.parse().expect("integer exponent");
    if (-4..6).contains(&exponent) {
        let decimals = usize::try_from(5 - exponent).expect("non-negative precision");
        trim_zeros(&format!("{value:.decimals$}")).to_string()
    } else {
        let sign = if exponent < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_zeros(mantissa), exponent.abs())
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn cell(value: Option<f64>) -> String {
    value.map(format_number).unwrap_or_default()
}

/// The combined table with one line per row.
pub fn render_csv(rows: &[SweepRow]) -> Result<String> {
    if rows.is_empty() {
        return Err(SweepError::EmptyRows);
    }
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        let cells: Vec<String> = METRICS.iter().map(|(_, get)| cell(get(r))).collect();
        let _ = writeln!(
            out,
            "{},{},{},{}",
            format_number(r.threshold),
            r.active_transmitters,
            cells.join(","),
            r.source.as_str()
        );
    }
    Ok(out)
}

/// One table per metric, keyed by metric name.
pub fn render_metric_csvs(rows: &[SweepRow]) -> Result<Vec<(&'static str, String)>> {
    if rows.is_empty() {
        return Err(SweepError::EmptyRows);
    }
    Ok(METRICS
        .iter()
        .map(|(name, get)| {
            let mut out = format!("threshold,active_transmitters,{name},source\n");
            for r in rows {
                let _ = writeln!(
                    out,
                    "{},{},{},{}",
                    format_number(r.threshold),
                    r.active_transmitters,
                    cell(get(r)),
                    r.source.as_str()
                );
            }
            (*name, out)
        })
        .collect())
}

pub fn emit_csv(rows: &[SweepRow], path: &Path) -> Result<()> {
    let text = render_csv(rows)?;
    std::fs::write(path, text).map_err(|e| SweepError::io(path, e))
}

/// Plain-text summary: resolved configuration followed by a result table.
pub fn render_summary(config: &RunConfig, rows: &[SweepRow]) -> String {
    let mut out = String::from("cv2x-sweep summary\n\n");
    out.push_str("resolved configuration\n----------------------\n");
    out.push_str(&config.to_toml());
    out.push_str("\nresults\n-------\n");
    let _ = writeln!(
        out,
        "{:>10} {:<10} {:>6} {:>10} {:>10} {:>12} {:>10} {:>10}",
        "threshold", "source", "active", "pdr", "throughput", "delay_us", "busy", "collision"
    );
    for r in rows {
        let show = |v: Option<f64>| v.map(format_number).unwrap_or_else(|| "-".to_string());
        let _ = writeln!(
            out,
            "{:>10} {:<10} {:>6} {:>10} {:>10} {:>12} {:>10} {:>10}",
            format_number(r.threshold),
            r.source.as_str(),
            r.active_transmitters,
            show(r.pdr),
            show(r.throughput),
            show(r.total_delay_us),
            show(r.busy_probability),
            show(r.collision_probability),
        );
    }
    out
}

/// Simulator reports as a TOML array of `[[run]]` tables.
pub fn render_reports(runs: &[MonteCarloRun]) -> String {
    #[derive(serde::Serialize)]
    struct Reports<'a> {
        run: &'a [MonteCarloRun],
    }
    toml::to_string(&Reports { run: runs }).expect("reports are representable")
}

/// Writes tables, summary and simulator reports into `dir`, returning the
/// paths written.
pub fn write_outputs(
    config: &RunConfig,
    rows: &[SweepRow],
    runs: &[MonteCarloRun],
    dir: &Path,
) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| SweepError::io(dir, e))?;
    let mut files: Vec<(PathBuf, String)> = match config.csv_layout {
        CsvLayout::Combined => vec![(dir.join("sweep.csv"), render_csv(rows)?)],
        CsvLayout::PerMetric => render_metric_csvs(rows)?
            .into_iter()
            .map(|(name, text)| (dir.join(format!("{name}.csv")), text))
            .collect(),
    };
    files.push((dir.join("summary.txt"), render_summary(config, rows)));
    if !runs.is_empty() {
        files.push((dir.join("montecarlo.toml"), render_reports(runs)));
    }
    for (path, text) in &files {
        std::fs::write(path, text).map_err(|e| SweepError::io(path, e))?;
    }
    Ok(files.into_iter().map(|(p, _)| p).collect())
}
