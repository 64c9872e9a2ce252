use thiserror::Error;

/// Errors produced anywhere in the core library.
#[derive(Debug, Error)]
pub enum Error {
    /// A problem size exceeds a configured cap.
    #[error("{what} has {requested} elements, exceeding the cap of {cap}; {hint}")]
    Sizing {
        what: &'static str,
        requested: usize,
        cap: usize,
        hint: &'static str,
    },

    /// An input violates a documented precondition.
    #[error("invalid {field}: {reason}")]
    Validation { field: String, reason: String },

    /// Two inputs disagree on a dimension.
    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    Dimension {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    /// A numerical routine could not reach its stated accuracy.
    #[error("numerical failure in {context}: {reason}")]
    Numerical {
        context: &'static str,
        reason: String,
    },

    /// The time step is too coarse for the integrator to stay physical.
    #[error("step size too large at step {step} (t = {time}): {reason}; reduce dt")]
    StepSize {
        step: usize,
        time: f64,
        reason: String,
    },

    #[error("malformed record: {0}")]
    Record(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn validation(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            reason: reason.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
