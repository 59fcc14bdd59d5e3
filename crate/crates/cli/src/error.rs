use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Clap(#[from] clap::Error),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("thread pool: {0}")]
    Pool(String),

    #[error("oracle tolerance exceeded: {0}")]
    OracleFailed(String),

    #[error(transparent)]
    Core(#[from] grand_core::Error),
}

impl CliError {
    /// 0 success, 1 I/O, 2 configuration, 3 guard or tolerance failure.
    pub fn exit_code(&self) -> i32 {
        use grand_core::Error as E;
        match self {
            CliError::Clap(e) => e.exit_code(),
            CliError::Config(_) => 2,
            CliError::Io { .. }
            | CliError::Csv { .. }
            | CliError::Json { .. }
            | CliError::Pool(_) => 1,
            CliError::OracleFailed(_) => 3,
            CliError::Core(e) => match e {
                E::InvalidDimensions { .. }
                | E::InvalidPolynomial { .. }
                | E::InvalidChannel(_)
                | E::InvalidPolicy(_)
                | E::OracleTooLarge { .. } => 2,
                E::Guard(_) | E::MonotonicityViolation { .. } => 3,
                _ => 1,
            },
        }
    }
}
