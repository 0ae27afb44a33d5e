use std::io;

use thiserror::Error;

/// Process exit codes.
pub mod exit {
    pub const SUCCESS: i32 = 0;
    pub const CRITERION_FAILURE: i32 = 1;
    pub const CONFIG: i32 = 2;
    pub const REGIME: i32 = 3;
    pub const SCHEDULE_INFEASIBLE: i32 = 4;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("{0}")]
    Regime(ctd_core::Error),
    #[error("schedule infeasible: {0}")]
    Infeasible(ctd_core::Error),
    #[error("{0}")]
    Model(ctd_core::Error),
    #[error("acceptance failure: {0}")]
    Criterion(String),
    #[error("i/o error on {path}: {source}")]
    Io { path: String, source: io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Model(_) | CliError::Io { .. } => exit::CONFIG,
            CliError::Regime(_) => exit::REGIME,
            CliError::Infeasible(_) => exit::SCHEDULE_INFEASIBLE,
            CliError::Criterion(_) => exit::CRITERION_FAILURE,
        }
    }

    pub fn io(path: impl Into<String>, source: io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}

impl From<ctd_core::Error> for CliError {
    fn from(e: ctd_core::Error) -> Self {
        match e {
            ctd_core::Error::RegimeViolation { .. } => CliError::Regime(e),
            ctd_core::Error::ScheduleInfeasible { .. } => CliError::Infeasible(e),
            _ => CliError::Model(e),
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
