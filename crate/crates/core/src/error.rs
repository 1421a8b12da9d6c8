use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("balls {i} and {j} overlap: distance {distance}")]
    Overlap { i: usize, j: usize, distance: f64 },

    #[error("balls {i} and {j} are not in contact: distance {distance}")]
    NotInContact { i: usize, j: usize, distance: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("structurally invalid trajectory: {0}")]
    Structure(String),

    #[error("simultaneous events at t = {time}: {detail}")]
    Simultaneous { time: f64, detail: String },

    #[error("normals are linearly dependent (pivot {pivot:e})")]
    RankDeficient { pivot: f64 },

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("perturbation failed after {attempts} attempts: {reason}")]
    PerturbationFailed { attempts: usize, reason: String },

    #[error("configuration infeasible: {0}")]
    Infeasible(String),

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn context(self, ctx: impl Into<String>) -> Self {
        Error::Context {
            context: ctx.into(),
            source: Box::new(self),
        }
    }

    /// Innermost error, skipping context wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Context { source, .. } => source.root(),
            other => other,
        }
    }
}

pub(crate) trait ResultExt<T> {
    fn context(self, ctx: impl Into<String>) -> Result<T>;
}

impl<T> ResultExt<T> for Result<T> {
    fn context(self, ctx: impl Into<String>) -> Result<T> {
        self.map_err(|e| e.context(ctx))
    }
}
