//! Oxygen use by circulating fuel-cell robot swarms in a lumped vascular network.

pub mod error;
pub mod mitigation;
pub mod mixing;
pub mod model;
pub mod netflow;
pub mod par;
pub mod scenarios;
pub mod sensitivity;
pub mod stats;
pub mod transport;
pub mod units;

pub use error::{Error, Result};
