use thiserror::Error;

#[derive(Debug, Error)]
pub enum SrfError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("parse error in {location}: {message}")]
    Parse { location: String, message: String },

    #[error("non-finite loss at epoch {epoch}: {loss}")]
    NonFiniteLoss { epoch: usize, loss: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = SrfError> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> SrfError {
    SrfError::InvalidArgument(msg.into())
}

pub(crate) fn check_dim(context: &'static str, expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(SrfError::DimensionMismatch {
            context,
            expected,
            actual,
        })
    }
}
