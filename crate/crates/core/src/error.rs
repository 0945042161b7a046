use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the admissible range of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The input has no canonical answer (e.g. norming the zero function).
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// A structural invariant of a value was found broken after construction.
    #[error("integrity error: {0}")]
    Integrity(String),

    /// A family of centers fails to cover the range of a random variable.
    #[error("coverage error: uncovered measure {uncovered} is not below {threshold}")]
    Coverage { uncovered: f64, threshold: f64 },

    /// A requested object would exceed a configured size cap.
    #[error("resource error: {0}")]
    Resource(String),

    /// A serialized value violates an invariant on load.
    #[error("invalid value: {0}")]
    Invalid(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }
}
