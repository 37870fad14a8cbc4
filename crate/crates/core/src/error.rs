use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A generator or enumeration parameter exceeds its resource guard.
    #[error("resource limit exceeded: {0}")]
    Resource(String),

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("degenerate triangle {face}: area {area:e} below threshold {threshold:e}")]
    DegenerateFace { face: usize, area: f64, threshold: f64 },

    #[error("invalid input: {0}")]
    Input(String),

    #[error("eigensolver did not converge after {iterations} iterations (best residual {best_residual:e})")]
    SolverDiverged { iterations: usize, best_residual: f64 },

    #[error("sparse factorization failed: pivot {pivot} is not positive ({value:e})")]
    NotPositiveDefinite { pivot: usize, value: f64 },

    #[error("flow blew up at t = {t}: {reason}")]
    BlowUp { t: f64, reason: String },

    #[error("contract violated: {0}")]
    Contract(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("time {t} is past extinction (sigma = {sigma})")]
    PastExtinction { t: f64, sigma: f64 },

    #[error("skipped: {0}")]
    Skipped(String),

    #[error("config error{}: {message}", line.map(|l| format!(" at line {l}")).unwrap_or_default())]
    Config { line: Option<usize>, message: String },

    #[error("failed to parse {path}: line {line}: {message}")]
    Parse { path: PathBuf, line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }
}
