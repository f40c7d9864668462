use thiserror::Error;

use crate::config::ConfigError;

/// Errors raised by the model, solver and simulator.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("negative duration: {0}")]
    NegativeDuration(f64),
    #[error("invalid AMC table: {0}")]
    InvalidTable(String),
    #[error("invalid channel model: {0}")]
    InvalidModel(String),
    #[error("{what} = {value} is outside 0..={max}")]
    OutOfRange {
        what: &'static str,
        value: usize,
        max: usize,
    },
    #[error("state space of {states} states exceeds the budget of {budget}")]
    CapacityOverflow { states: usize, budget: usize },
    #[error("power iteration did not converge after {iterations} iterations (last step {last_step:e})")]
    NotConverged { iterations: usize, last_step: f64 },
    #[error("stationary residual {residual:e} exceeds tolerance {tol:e}")]
    Residual { residual: f64, tol: f64 },
    #[error("chain is reducible: no unique stationary law (state {state})")]
    ReducibleChain { state: usize },
    #[error("{0}")]
    WrongMode(&'static str),
    #[error("invalid configuration:\n{}", format_config_errors(.0))]
    Config(Vec<ConfigError>),
    #[error("invalid sweep: {0}")]
    Sweep(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

fn format_config_errors(errors: &[ConfigError]) -> String {
    errors
        .iter()
        .map(|e| format!("  {e}"))
        .collect::<Vec<_>>()
        .join("\n")
}

impl Error {
    /// True for failures caused by bad user input rather than numerics.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::InvalidParams(_)
                | Error::NegativeDuration(_)
                | Error::InvalidTable(_)
                | Error::InvalidModel(_)
                | Error::OutOfRange { .. }
                | Error::WrongMode(_)
                | Error::Config(_)
                | Error::Sweep(_)
        )
    }

    /// True for solver non-convergence, reducibility or state-budget failures.
    pub fn is_numeric_error(&self) -> bool {
        matches!(
            self,
            Error::CapacityOverflow { .. }
                | Error::NotConverged { .. }
                | Error::Residual { .. }
                | Error::ReducibleChain { .. }
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
