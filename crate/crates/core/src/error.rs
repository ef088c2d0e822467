use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = GfemError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum GfemError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("point ({x}, {y}) lies outside {what}")]
    OutOfDomain { x: f64, y: f64, what: String },

    /// Raised before an exponential would overflow or lose all meaning.
    #[error("enrichment overflow guard: {0}")]
    OverflowGuard(String),

    #[error("enrichment domain error: {0}")]
    EnrichmentDomain(String),

    #[error("boundary condition mode conflict: {0}")]
    ModeConflict(String),

    #[error("assembly failed on element {element}: {reason}")]
    Assembly { element: usize, reason: String },

    #[error("singular system: pivot {pivot:e} at dof {dof} is below threshold {threshold:e}")]
    SingularSystem { dof: usize, pivot: f64, threshold: f64 },

    #[error("degenerate enrichment on element {element}: {reason}")]
    DegenerateEnrichment { element: usize, reason: String },

    #[error("continuation step {step} failed: {source}")]
    Continuation {
        step: usize,
        #[source]
        source: Box<GfemError>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("config parse error at line {line}: {message}")]
    ConfigParse { line: usize, message: String },

    #[error("config schema error for `{key}`: {message}")]
    ConfigSchema { key: String, message: String },
}

impl GfemError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        GfemError::InvalidArgument(msg.into())
    }
}
