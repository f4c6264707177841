use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument fell outside the domain of the function.
    #[error("domain error: {0}")]
    Domain(String),

    /// The network graph does not have the required shape.
    #[error("structural error: {0}")]
    Structural(String),

    /// Adaptive integration could not make progress.
    #[error("numerical error in segment `{segment}` at t = {time:.6} s: {reason} (total oxygen {total_oxygen:.6e} m^-3)")]
    Numerical {
        segment: String,
        time: f64,
        total_oxygen: f64,
        reason: String,
    },

    #[error("configuration error: {0}")]
    Config(String),

    /// Rejection sampling gave up.
    #[error("infeasible constraints: {rejections} consecutive rejections (last: {last_reason})")]
    Infeasible { rejections: usize, last_reason: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed network file: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn structural(msg: impl Into<String>) -> Self {
        Error::Structural(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
