//! Threshold sweeps over the distance-prioritized channel-access model.
//!
//! A [`RunConfig`] selects thresholds and evaluation paths; [`run_sweep`]
//! produces one [`SweepRow`] per threshold and path, and the [`output`]
//! module renders them as CSV tables and a text summary.

pub mod config;
pub mod error;
pub mod output;
pub mod sweep;

pub use config::{load_config, parse_config, CsvLayout, Mode, RunConfig};
pub use error::{Result, SweepError};
pub use output::{emit_csv, render_csv, write_outputs};
pub use sweep::{run_sweep, run_sweep_detailed, Source, SweepOutcome, SweepRow};
