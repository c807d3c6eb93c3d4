use thiserror::Error;

/// Errors raised by the analytic model, the scenario builder and the simulator.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid {name}: {reason}")]
    Domain { name: &'static str, reason: String },

    #[error("stationary solve failed: balance residual {residual:e}")]
    Solver { residual: f64 },

    #[error("chain has no unique stationary distribution: {0}")]
    NotErgodic(String),

    #[error(
        "fixed point did not converge after {iterations} iterations \
         (tau = {tau}, residual = {residual:e})"
    )]
    NonConvergence {
        iterations: usize,
        tau: f64,
        residual: f64,
    },

    #[error("inconsistent state probabilities: busy residual {0:e} is negative")]
    ModelInconsistency(f64),

    #[error("unknown vehicle id {0}")]
    UnknownVehicle(u32),

    #[error("scenario record line {line}: {reason}")]
    Record { line: usize, reason: String },
}

impl Error {
    pub(crate) fn domain(name: &'static str, reason: impl Into<String>) -> Self {
        Error::Domain {
            name,
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_probability(name: &'static str, value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::domain(name, format!("{value} is not a probability")))
    }
}
