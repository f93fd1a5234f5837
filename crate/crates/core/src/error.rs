use thiserror::Error;

/// Errors produced anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("codeword does not match network structure: {0}")]
    CodewordStructure(String),

    #[error("training diverged: non-finite loss at epoch {epoch}")]
    NonFiniteLoss { epoch: usize },

    #[error("simplex stalled after {pivots} pivots{context}")]
    SolverStall { pivots: usize, context: String },

    #[error("linear program is unbounded")]
    Unbounded,

    #[error("filtration has more than {cap} simplices")]
    SimplexCap { cap: usize },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code for the CLI: 1 usage/IO, 2 numeric failure, 3 resource cap.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::NonFinite(_) | Error::NonFiniteLoss { .. } | Error::Unbounded => 2,
            Error::SolverStall { .. } | Error::SimplexCap { .. } => 3,
            _ => 1,
        }
    }

    pub(crate) fn dims(context: &'static str, expected: usize, found: usize) -> Self {
        Error::DimensionMismatch {
            context,
            expected,
            found,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
