//! Library side of the `optomech` command-line tool: configuration,
//! the five commands and result serialization.

pub mod commands;
pub mod config;
pub mod output;

use thiserror::Error;

use optomech::dynamics::DynamicsError;
use optomech::model::ModelError;
use optomech::noon::NoonError;
use optomech::transport::TransportError;

pub use commands::{run_command, Command};
pub use config::{Delta0, Initial, Route, RunConfig};
pub use output::ResultBundle;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    /// 2 for configuration errors, 3 for numerical non-convergence, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::InvalidParameter { .. } => CliError::Config(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<TransportError> for CliError {
    fn from(e: TransportError) -> Self {
        match e {
            TransportError::Model(m) => m.into(),
            TransportError::InvalidInput(_) => CliError::Config(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<DynamicsError> for CliError {
    fn from(e: DynamicsError) -> Self {
        match e {
            DynamicsError::Model(m) => m.into(),
            DynamicsError::InvalidInput(_) => CliError::Config(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<NoonError> for CliError {
    fn from(e: NoonError) -> Self {
        match e {
            NoonError::InvalidSetup(_) => CliError::Config(e.to_string()),
            NoonError::Dynamics(d) => d.into(),
            NoonError::Transport(t) => t.into(),
            NoonError::Model(m) => m.into(),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}
