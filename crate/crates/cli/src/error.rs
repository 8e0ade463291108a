use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{}", describe(.0))]
    Core(#[from] cdma_core::Error),

    #[error("{0}")]
    Usage(String),

    #[error("non-finite value {value} in column `{column}`, row {row}")]
    NonFinite { column: String, row: usize, value: f64 },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Core errors name parameters by their flag spelling without dashes.
fn describe(e: &cdma_core::Error) -> String {
    match e {
        cdma_core::Error::InvalidParameter { name, reason } => {
            format!("invalid value for `--{name}`: {reason}")
        }
        other => other.to_string(),
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(cdma_core::Error::EnumerationRefused { .. }) => 3,
            CliError::Core(_) | CliError::Usage(_) => 2,
            CliError::NonFinite { .. } | CliError::Io { .. } => 1,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}
