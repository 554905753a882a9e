use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    Parameter { name: &'static str, reason: String },

    #[error("sector dimension {dim} exceeds the configured cap of {cap}")]
    Capacity { dim: u128, cap: usize },

    #[error("eigendecomposition of a {rows}x{cols} matrix did not converge")]
    Diagonalization { rows: usize, cols: usize },

    #[error("contract violation: {0}")]
    Contract(String),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::Parameter {
            name,
            reason: reason.into(),
        }
    }
}
