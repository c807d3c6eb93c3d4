//! Run configuration read from TOML.
//!
//! Every key is optional; omitted keys take the defaults below. Unknown keys
//! are rejected.
//!
//! ```toml
//! mode = "both"                  # analytic | montecarlo | both
//! thresholds = [200, 400, 600]   # metres
//! output_dir = "results"
//! csv_layout = "combined"        # combined | per_metric
//!
//! [scenario]
//! vehicles = 50
//! road_length = 1000.0
//! lane_separation = 4.0
//! seed = 42
//! cw_policy = "distance_scaled"  # distance_scaled | fixed
//!
//! [dcf]
//! cw_min = 7
//! max_stage = 5
//! countdown = "virtual_slot"     # virtual_slot | freeze_on_busy
//! tolerance = 1e-9
//! max_iterations = 10000
//!
//! [timing]                       # microseconds, bytes, bits per microsecond
//! difs = 65.0
//! sifs = 35.0
//! slot = 15.0
//! propagation = 1.0
//! payload_bytes = 1100
//! data_rate = 6.0
//! header = 40.0
//! ack = 40.0
//! rts = 30.0
//! cts = 25.0
//!
//! [montecarlo]
//! total_slots = 1000000
//! seed = 42                      # defaults to scenario.seed
//! access_mode = "basic"          # basic | rts_cts
//! ```

use std::path::{Path, PathBuf};

use cv2x_core::{AccessMode, Countdown, CwPolicy, DcfParameters, FixedPointOptions, TimingProfile};
use serde::{Deserialize, Serialize};

use crate::error::{Result, SweepError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Analytic,
    Montecarlo,
    #[default]
    Both,
}

impl Mode {
    pub fn analytic(self) -> bool {
        matches!(self, Mode::Analytic | Mode::Both)
    }

    pub fn montecarlo(self) -> bool {
        matches!(self, Mode::Montecarlo | Mode::Both)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CsvLayout {
    #[default]
    Combined,
    PerMetric,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    pub vehicles: usize,
    pub road_length: f64,
    pub lane_separation: f64,
    pub seed: u64,
    pub cw_policy: CwPolicy,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            vehicles: 50,
            road_length: 1000.0,
            lane_separation: cv2x_core::scenario::DEFAULT_LANE_SEPARATION,
            seed: 42,
            cw_policy: CwPolicy::DistanceScaled,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DcfConfig {
    pub cw_min: u32,
    pub max_stage: u32,
    pub countdown: Countdown,
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for DcfConfig {
    fn default() -> Self {
        let params = DcfParameters::default();
        let opts = FixedPointOptions::default();
        DcfConfig {
            cw_min: params.cw_min,
            max_stage: params.max_stage,
            countdown: params.countdown,
            tolerance: opts.tolerance,
            max_iterations: opts.max_iterations,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MonteCarloConfig {
    pub total_slots: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub access_mode: AccessMode,
}

impl Default for MonteCarloConfig {
    fn default() -> Self {
        MonteCarloConfig {
            total_slots: 1_000_000,
            seed: None,
            access_mode: AccessMode::Basic,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub mode: Mode,
    pub thresholds: Vec<f64>,
    pub output_dir: PathBuf,
    pub csv_layout: CsvLayout,
    pub scenario: ScenarioConfig,
    pub dcf: DcfConfig,
    pub timing: TimingProfile,
    pub montecarlo: MonteCarloConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            mode: Mode::Both,
            thresholds: vec![200.0, 400.0, 600.0],
            output_dir: PathBuf::from("results"),
            csv_layout: CsvLayout::Combined,
            scenario: ScenarioConfig::default(),
            dcf: DcfConfig::default(),
            timing: TimingProfile::default(),
            montecarlo: MonteCarloConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.thresholds.is_empty() {
            return Err(SweepError::validation(
                "thresholds",
                "at least one threshold is required",
            ));
        }
        for (i, &t) in self.thresholds.iter().enumerate() {
            if !(t > 0.0 && t.is_finite()) {
                return Err(SweepError::validation(
                    format!("thresholds[{i}]"),
                    format!("{t} is not a positive distance"),
                ));
            }
            if self.thresholds[..i].contains(&t) {
                return Err(SweepError::validation(
                    format!("thresholds[{i}]"),
                    format!("{t} is listed twice"),
                ));
            }
        }
        if self.scenario.vehicles < 2 {
            return Err(SweepError::validation(
                "scenario.vehicles",
                "at least two vehicles are required",
            ));
        }
        if !(self.scenario.road_length > 0.0 && self.scenario.road_length.is_finite()) {
            return Err(SweepError::validation(
                "scenario.road_length",
                "must be positive",
            ));
        }
        if !(self.scenario.lane_separation >= 0.0 && self.scenario.lane_separation.is_finite()) {
            return Err(SweepError::validation(
                "scenario.lane_separation",
                "must be non-negative",
            ));
        }
        if !(self.dcf.tolerance > 0.0) {
            return Err(SweepError::validation("dcf.tolerance", "must be positive"));
        }
        if self.dcf.max_iterations == 0 {
            return Err(SweepError::validation(
                "dcf.max_iterations",
                "must be at least 1",
            ));
        }
        if self.montecarlo.total_slots == 0 {
            return Err(SweepError::validation(
                "montecarlo.total_slots",
                "must be at least 1",
            ));
        }
        self.timing.validate().map_err(|e| qualify("timing", e))?;
        self.dcf_parameters(1).map_err(|e| qualify("dcf", e))?;
        Ok(())
    }

    /// Chain parameters for `stations` homogeneous contenders.
    pub fn dcf_parameters(&self, stations: u32) -> cv2x_core::Result<DcfParameters> {
        Ok(DcfParameters::new(
            self.dcf.cw_min,
            self.dcf.max_stage,
            stations,
            self.timing.slot,
        )?
        .with_countdown(self.dcf.countdown))
    }

    pub fn fixed_point_options(&self) -> FixedPointOptions {
        FixedPointOptions {
            tolerance: self.dcf.tolerance,
            max_iterations: self.dcf.max_iterations,
            ..FixedPointOptions::default()
        }
    }

    pub fn montecarlo_seed(&self) -> u64 {
        self.montecarlo.seed.unwrap_or(self.scenario.seed)
    }

    /// The resolved configuration as TOML.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration is always representable")
    }
}

fn qualify(section: &str, err: cv2x_core::Error) -> SweepError {
    match err {
        cv2x_core::Error::Domain { name, reason } => {
            SweepError::validation(format!("{section}.{name}"), reason)
        }
        other => SweepError::validation(section, other.to_string()),
    }
}

/// Parses and validates configuration text.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let config: RunConfig = toml::from_str(text).map_err(|e| {
        let (line, column) = e
            .span()
            .map(|span| line_column(text, span.start))
            .unwrap_or((1, 1));
        SweepError::Parse {
            line,
            column,
            message: e.message().to_string(),
        }
    })?;
    config.validate()?;
    Ok(config)
}

pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| SweepError::io(path, e))?;
    parse_config(&text)
}

fn line_column(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1;
    (line, column)
}
