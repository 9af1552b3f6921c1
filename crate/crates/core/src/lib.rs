//! Strategic bidding against reserve-learning sellers in repeated
//! second-price auctions.

pub mod comp;
pub mod dist;
pub mod error;
pub mod game;
pub mod mech;
pub mod numerics;
pub mod oracle;
pub mod rng;
pub mod seller;
pub mod strategy;

pub use comp::Competition;
pub use dist::{DistSpec, Distribution};
pub use error::{Error, Result};
pub use strategy::{BidDistribution, Strategy, StrategyKind};
