use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("asymmetric distribution: {0}")]
    AsymmetricDistribution(String),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// Exhaustive enumeration would cost more than the configured limit allows.
    #[error(
        "enumeration refused: K = {k} exceeds the limit K_max = {limit} \
         ({configurations:.3e} configurations, roughly {flops:.3e} floating-point operations per instance)"
    )]
    EnumerationRefused {
        k: usize,
        limit: usize,
        configurations: f64,
        flops: f64,
    },
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
