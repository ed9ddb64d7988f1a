use thiserror::Error;

/// Input that breaks a documented precondition or invariant.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ValidationError {
    #[error("unknown bias: {0:?}")]
    UnknownBias(String),
    #[error("instruction must be nonempty")]
    EmptyInstruction,
    #[error("instruction must not have leading or trailing whitespace")]
    UntrimmedInstruction,
    #[error("response must be nonempty")]
    EmptyResponse,
    #[error("{field}: {message}")]
    Field { field: String, message: String },
}

impl ValidationError {
    pub fn field(field: impl Into<String>, message: impl Into<String>) -> Self {
        ValidationError::Field {
            field: field.into(),
            message: message.into(),
        }
    }
}
