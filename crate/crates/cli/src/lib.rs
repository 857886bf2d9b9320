//! Scenario runner for structured collision models: TOML configs and figure
//! presets in, CSV trajectories, ledgers and key=value summaries out.

use std::path::PathBuf;

pub mod config;
pub mod output;
pub mod presets;
pub mod runner;

pub use config::RunConfig;
pub use output::{Summary, Table};
pub use presets::Preset;
pub use runner::{run, run_preset, sweep, validate, RunReport, SweepSpec};

/// Process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitStatus {
    Success = 0,
    ConfigError = 1,
    LawViolation = 2,
    NumericalFailure = 3,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{origin}: {message}")]
    Config { origin: String, message: String },

    #[error("invalid scenario ({context}): {source}")]
    Scenario {
        context: String,
        #[source]
        source: cvcm_core::Error,
    },

    #[error("numerical failure ({context}): {source}")]
    Numerical {
        context: String,
        #[source]
        source: cvcm_core::Error,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_status(&self) -> ExitStatus {
        match self {
            CliError::Config { .. } | CliError::Scenario { .. } | CliError::Io { .. } => ExitStatus::ConfigError,
            CliError::Numerical { .. } => ExitStatus::NumericalFailure,
        }
    }
}
