use std::path::PathBuf;

use cliffcert::channels::ChannelError;
use cliffcert::clifford::CliffordError;
use cliffcert::estimator::EstimatorError;
use cliffcert::oracle::OracleError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid {field}: {message}")]
    Invalid { field: String, message: String },
    #[error("{what} is limited to {max} qubits, got {n}")]
    CapExceeded { what: &'static str, n: usize, max: usize },
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },
    #[error("config {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error(transparent)]
    Estimator(#[from] EstimatorError),
    #[error(transparent)]
    Oracle(OracleError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl From<OracleError> for CliError {
    fn from(e: OracleError) -> Self {
        match e {
            OracleError::TooLarge { n, max } => CliError::CapExceeded { what: "the dense backend", n, max },
            other => CliError::Oracle(other),
        }
    }
}

impl CliError {
    pub fn invalid(field: &str, message: impl ToString) -> Self {
        CliError::Invalid {
            field: field.to_string(),
            message: message.to_string(),
        }
    }

    /// 2 when a size cap was exceeded, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::CapExceeded { .. } => 2,
            _ => 1,
        }
    }
}

/// Attaches a config field name to a core error.
pub(crate) trait FieldContext<T> {
    fn field(self, name: &str) -> Result<T, CliError>;
}

macro_rules! field_context {
    ($($err:ty),*) => {$(
        impl<T> FieldContext<T> for Result<T, $err> {
            fn field(self, name: &str) -> Result<T, CliError> {
                self.map_err(|e| CliError::invalid(name, e))
            }
        }
    )*};
}

field_context!(ChannelError, CliffordError, EstimatorError);
