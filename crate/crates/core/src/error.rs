use std::path::PathBuf;

use crate::linalg::CMat;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("failed to parse config {path}: {message}")]
    ConfigParse { path: PathBuf, message: String },

    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("link is outside the array front hemisphere ({side} boresight projection {projection:.3e} <= 0)")]
    NotVisible { side: &'static str, projection: f64 },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("matrix is singular to working precision ({0})")]
    SingularMatrix(&'static str),

    #[error("matrix is not positive definite ({0})")]
    NotPositiveDefinite(&'static str),

    #[error("multiplier expansion did not reach a feasible point after {0} steps")]
    ExpansionLimit(usize),

    #[error("ellipsoid method stopped at its cap of {iterations} iterations")]
    EllipsoidCap {
        iterations: usize,
        /// Multipliers at the final centre and their precoders.
        mu: Vec<f64>,
        w: Vec<CMat>,
    },

    #[error("objective increased at iteration {iteration}: {previous} -> {current}")]
    NonMonotone {
        iteration: usize,
        previous: f64,
        current: f64,
    },

    #[error("need at least as many satellites ({sats}) as users ({users}) for a one-to-one assignment")]
    TooFewSatellites { sats: usize, users: usize },

    #[error("I/O error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("serialization error: {0}")]
    Serialize(String),
}
