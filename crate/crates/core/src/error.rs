use thiserror::Error;

/// Error type shared by every module in the crate.
///
/// The variants map onto the CLI exit-code contract: configuration and
/// contract problems are usage errors (exit 1), dataset and file problems
/// are data errors (exit 2), and a NaN loss during training is a
/// divergence (exit 3).
#[derive(Debug, Error)]
pub enum Error {
    /// Shapes do not line up for an operation.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// Invalid configuration (bad grouping, unknown attribute, bad hyperparameter).
    #[error("configuration error: {0}")]
    Config(String),

    /// An API contract was violated (wrong variant, missing cache, missing rng).
    #[error("contract violation: {0}")]
    Contract(String),

    /// Dataset-level problem that is not a parse error.
    #[error("data error: {0}")]
    Data(String),

    /// Malformed input file, with the 1-based line number.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    /// Checkpoint file cannot be read back or does not match the topology.
    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    /// Training produced a non-finite loss.
    #[error("numerical divergence: {0}")]
    Diverged(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<V> = std::result::Result<V, Error>;
