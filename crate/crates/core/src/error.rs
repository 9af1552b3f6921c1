use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("value {0} outside the support")]
    OutOfSupport(f64),
    #[error("density vanishes at {0}")]
    DegenerateDensity(f64),
    #[error("revenue curve is not unimodal")]
    NotUnimodal,
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("invalid thresholds: {0}")]
    InvalidThresholds(String),
    #[error("bid map is not monotone")]
    NonMonotone,
    #[error("empty sample")]
    EmptySample,
    #[error("assumption violated: {0}")]
    AssumptionViolated(String),
    #[error("no root: {0}")]
    NoRoot(String),
    #[error("no crossing: {0}")]
    NoCrossing(String),
    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
