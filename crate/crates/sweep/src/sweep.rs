use std::cmp::Ordering;

use cv2x_core::{
    analytic_pdr, authorized_transmitters, generate_scenario, normalized_throughput,
    run_scenario_simulation, solve_fixed_point_with, state_probabilities, total_delay, Scenario,
    SimConfig, SimReport,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    Analytic,
    Montecarlo,
}

impl Source {
    pub fn as_str(self) -> &'static str {
        match self {
            Source::Analytic => "analytic",
            Source::Montecarlo => "montecarlo",
        }
    }
}

/// Headline metrics at one threshold from one evaluation path. Metrics are
/// `None` when nobody is authorized or the quantity is undefined.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub threshold: f64,
    pub active_transmitters: usize,
    pub pdr: Option<f64>,
    pub throughput: Option<f64>,
    pub total_delay_us: Option<f64>,
    pub busy_probability: Option<f64>,
    pub collision_probability: Option<f64>,
    pub source: Source,
}

impl SweepRow {
    fn empty(threshold: f64, source: Source) -> SweepRow {
        SweepRow {
            threshold,
            active_transmitters: 0,
            pdr: None,
            throughput: None,
            total_delay_us: None,
            busy_probability: None,
            collision_probability: None,
            source,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonteCarloRun {
    pub threshold: f64,
    pub report: SimReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutcome {
    pub rows: Vec<SweepRow>,
    pub montecarlo: Vec<MonteCarloRun>,
}

/// Evaluates every configured threshold with the selected paths.
pub fn run_sweep(config: &RunConfig) -> Result<Vec<SweepRow>> {
    Ok(run_sweep_detailed(config)?.rows)
}

/// Like [`run_sweep`], also returning the raw simulator reports.
pub fn run_sweep_detailed(config: &RunConfig) -> Result<SweepOutcome> {
    config.validate()?;
    let sc = &config.scenario;
    let scenario = generate_scenario(sc.seed, sc.vehicles, sc.road_length, sc.lane_separation)?;

    let mut jobs = Vec::new();
    for &threshold in &config.thresholds {
        if config.mode.analytic() {
            jobs.push((threshold, Source::Analytic));
        }
        if config.mode.montecarlo() {
            jobs.push((threshold, Source::Montecarlo));
        }
    }

    let results = jobs
        .into_par_iter()
        .map(|(threshold, source)| evaluate(config, &scenario, threshold, source))
        .collect::<Result<Vec<_>>>()?;

    let mut rows = Vec::with_capacity(results.len());
    let mut montecarlo = Vec::new();
    for (row, report) in results {
        if let Some(report) = report {
            montecarlo.push(MonteCarloRun {
                threshold: row.threshold,
                report,
            });
        }
        rows.push(row);
    }
    rows.sort_by(|a, b| match a.threshold.total_cmp(&b.threshold) {
        Ordering::Equal => a.source.cmp(&b.source),
        other => other,
    });
    montecarlo.sort_by(|a, b| a.threshold.total_cmp(&b.threshold));
    Ok(SweepOutcome { rows, montecarlo })
}

fn evaluate(
    config: &RunConfig,
    scenario: &Scenario,
    threshold: f64,
    source: Source,
) -> Result<(SweepRow, Option<SimReport>)> {
    let auth = authorized_transmitters(scenario, threshold, config.dcf.cw_min)?;
    let active = auth.active_count();
    if active == 0 {
        log::warn!("no vehicle is authorized at threshold {threshold} m; metrics left empty");
        return Ok((SweepRow::empty(threshold, source), None));
    }
    log::info!(
        "threshold {threshold} m: {active} authorized, evaluating {}",
        source.as_str()
    );
    match source {
        Source::Analytic => Ok((analytic_row(config, threshold, active)?, None)),
        Source::Montecarlo => {
            let report = montecarlo_report(config, scenario, threshold)?;
            let row = SweepRow {
                threshold,
                active_transmitters: report.active_transmitters,
                pdr: report.pdr,
                throughput: Some(report.throughput),
                total_delay_us: report.mean_mac_delay_us,
                busy_probability: report.state_frequencies.map(|f| f.busy),
                collision_probability: report.collision_fraction,
                source,
            };
            Ok((row, Some(report)))
        }
    }
}

/// Homogeneous fixed point with `active` contenders and the metrics built on it.
pub fn analytic_row(config: &RunConfig, threshold: f64, active: usize) -> Result<SweepRow> {
    let n = u32::try_from(active).expect("vehicle counts fit in u32");
    let params = config.dcf_parameters(n)?;
    let solution = solve_fixed_point_with(&params, &config.fixed_point_options())?;
    let tau = solution.tau;
    let states = state_probabilities(tau, tau, n)?;
    let delay = total_delay(&states, n, &config.timing, config.dcf.cw_min)?;
    Ok(SweepRow {
        threshold,
        active_transmitters: active,
        pdr: Some(analytic_pdr(tau, n)?),
        throughput: Some(normalized_throughput(tau, n, &config.timing)?),
        total_delay_us: Some(delay.t_total),
        busy_probability: Some(states.p_busy),
        collision_probability: Some(solution.p_collision),
        source: Source::Analytic,
    })
}

fn montecarlo_report(config: &RunConfig, scenario: &Scenario, threshold: f64) -> Result<SimReport> {
    let base = SimConfig {
        stations: Vec::new(),
        max_stage: config.dcf.max_stage,
        timing: config.timing,
        total_slots: config.montecarlo.total_slots,
        seed: config.montecarlo_seed(),
        access_mode: config.montecarlo.access_mode,
        countdown: config.dcf.countdown,
    };
    Ok(run_scenario_simulation(
        scenario,
        threshold,
        config.dcf.cw_min,
        config.scenario.cw_policy,
        &base,
    )?)
}
