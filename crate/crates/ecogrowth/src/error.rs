//! Error type shared across the solver stack.

use std::path::PathBuf;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong when building or running a scenario.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A pointwise model function was evaluated outside its domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// A parameter set failed validation.
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    /// A field or trajectory does not match the grid or horizon it is used with.
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    /// Direct factorization hit a non-positive pivot.
    #[error("linear solve failed: {0}")]
    SingularSystem(String),

    /// A solver produced NaN or infinity.
    #[error("non-finite {quantity} at time step {step}")]
    NonFinite {
        /// Which trajectory went non-finite.
        quantity: &'static str,
        /// Time level at which the first non-finite value appeared.
        step: usize,
    },

    /// A control set violates the feasibility constraints.
    #[error("infeasible controls: {0}")]
    Infeasible(String),

    /// A config file or CLI flag combination is invalid.
    #[error("config error: {0}")]
    Config(String),

    /// Filesystem failure, annotated with the path involved.
    #[error("io error on {path}: {source}")]
    Io {
        /// Path of the file or directory being touched.
        path: PathBuf,
        /// Underlying OS error.
        #[source]
        source: std::io::Error,
    },

    /// Another run holds the output directory.
    #[error("output directory {0} is locked by another run (remove .run.lock if stale)")]
    Locked(PathBuf),
}

impl Error {
    /// Attaches a path to a raw IO error.
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
