//! Command configurations. Each subcommand reads one JSON record; every
//! field has a default, unknown keys are rejected.

use std::path::Path;

use auctionlab_core::seller::EpsSchedule;
use auctionlab_core::{Competition, Distribution};
use serde::{de::DeserializeOwned, Deserialize, Serialize};

use crate::LabError;

pub const DEFAULT_SEED: u64 = 20_190_601;

fn uniform01() -> Distribution {
    Distribution::uniform(0.0, 1.0).expect("valid uniform")
}

fn alpha_points() -> usize {
    41
}

fn search_grid() -> usize {
    200
}

fn two() -> u32 {
    2
}

fn yes() -> bool {
    true
}

fn nash_ks() -> Vec<u32> {
    vec![2, 3, 4, 5]
}

fn half() -> f64 {
    0.5
}

fn eta() -> EpsSchedule {
    EpsSchedule::Power { eta: 0.1 }
}

fn n_grid() -> Vec<usize> {
    vec![1_000, 10_000, 100_000]
}

fn delta() -> f64 {
    0.05
}

fn trials() -> usize {
    200
}

fn one() -> f64 {
    1.0
}

fn million() -> usize {
    1_000_000
}

/// Welfare-sharing sweep over the phase weight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BestResponseConfig {
    #[serde(default = "uniform01")]
    pub value_law: Distribution,
    /// Highest competing bid; one truthful opponent with the value law when absent.
    #[serde(default)]
    pub competition: Option<Competition>,
    /// Phase-1 reserve law of the random-reserve arm.
    #[serde(default = "uniform01")]
    pub reserve_law: Distribution,
    #[serde(default = "alpha_points")]
    pub alpha_points: usize,
    #[serde(default = "search_grid")]
    pub grid: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NashConfig {
    #[serde(default = "uniform01")]
    pub value_law: Distribution,
    #[serde(default = "nash_ks")]
    pub k: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseConfig {
    #[serde(default = "uniform01")]
    pub value_law: Distribution,
    #[serde(default)]
    pub competition: Option<Competition>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ErmConfig {
    #[serde(default = "uniform01")]
    pub value_law: Distribution,
    #[serde(default = "half")]
    pub r: f64,
    #[serde(default = "eta")]
    pub schedule: EpsSchedule,
    #[serde(default = "n_grid")]
    pub n_grid: Vec<usize>,
    #[serde(default = "delta")]
    pub delta: f64,
    #[serde(default = "trials")]
    pub trials: usize,
    #[serde(default)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MechanismsConfig {
    #[serde(default = "uniform01")]
    pub value_law: Distribution,
    #[serde(default = "two")]
    pub k: u32,
    #[serde(default = "yes")]
    pub thresholding: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    /// Criterion numbers to run; all when absent.
    #[serde(default)]
    pub criteria: Option<Vec<u32>>,
    /// Multiplies every numeric tolerance.
    #[serde(default = "one")]
    pub tolerance_scale: f64,
    #[serde(default = "million")]
    pub mc_auctions: usize,
    #[serde(default)]
    pub seed: Option<u64>,
}

macro_rules! defaults_from_empty {
    ($($t:ty),*) => {$(
        impl Default for $t {
            fn default() -> Self {
                serde_json::from_str("{}").expect("every field has a default")
            }
        }
    )*};
}

defaults_from_empty!(BestResponseConfig, NashConfig, PhaseConfig, ErmConfig, MechanismsConfig, VerifyConfig);

/// Reads a config from `path`, or the defaults when no path is given.
pub fn load<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T, LabError> {
    match path {
        None => Ok(T::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| LabError::Config(format!("{}: {e}", p.display())))?;
            parse(&text)
        }
    }
}

pub fn parse<T: DeserializeOwned>(text: &str) -> Result<T, LabError> {
    serde_json::from_str(text).map_err(|e| LabError::Config(e.to_string()))
}
