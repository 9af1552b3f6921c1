//! Experiment runner: figure and table sweeps as CSV/JSON, and the
//! acceptance suite.

pub mod commands;
pub mod config;
pub mod output;
pub mod verify;

use auctionlab_core::Error;

#[derive(Debug, thiserror::Error)]
pub enum LabError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] Error),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("acceptance failed: {0}")]
    Acceptance(String),
}

impl LabError {
    pub fn exit_code(&self) -> i32 {
        match self {
            LabError::Config(_) | LabError::Io(_) => 2,
            LabError::Core(e) => match e {
                Error::ConfigInvalid(_)
                | Error::InvalidParams(_)
                | Error::InvalidThresholds(_)
                | Error::OutOfSupport(_)
                | Error::EmptySample => 2,
                _ => 3,
            },
            LabError::Acceptance(_) => 4,
        }
    }
}

impl From<csv::Error> for LabError {
    fn from(e: csv::Error) -> Self {
        LabError::Io(std::io::Error::other(e))
    }
}

impl From<serde_json::Error> for LabError {
    fn from(e: serde_json::Error) -> Self {
        LabError::Io(std::io::Error::other(e))
    }
}
