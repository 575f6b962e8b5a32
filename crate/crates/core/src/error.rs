use thiserror::Error;

/// Errors raised across the workbench.
///
/// The variants map onto the CLI exit codes: usage-type errors exit with 1,
/// numerical failures with 2.
#[derive(Debug, Error)]
pub enum Error {
    #[error("usage error: {0}")]
    Usage(String),

    #[error("numerical failure: {detail} (diagonal jitter reached {jitter:e})")]
    Numerical { detail: String, jitter: f64 },

    #[error("dictionary capacity {capacity} exceeded; an eviction policy ({policy}) is required")]
    Capacity { capacity: usize, policy: &'static str },

    #[error("schema version mismatch: expected {expected}, found {found}")]
    Schema { expected: String, found: String },

    #[error("invalid configuration:\n  - {}", .0.join("\n  - "))]
    Config(Vec<String>),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }

    /// Process exit code for this error class.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Numerical { .. } => 2,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
