use std::path::Path;

use intweight::approximator::ApproxError;
use intweight::functions::FunctionError;
use intweight::highprec::PrecisionError;
use intweight::kronecker::SearchError;
use intweight::network::NetworkError;
use intweight::regression::RegressionError;
use serde_json::{json, Value};

pub const EXIT_NOT_FOUND: i32 = 2;
pub const EXIT_VALIDATION: i32 = 3;
pub const EXIT_PRECISION: i32 = 4;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("no admissible weight found")]
    NotFound(Value),
    #[error("{0}")]
    Validation(String),
    #[error("precision cap reached: {0}")]
    Precision(String),
    #[error("{0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::NotFound(_) => EXIT_NOT_FOUND,
            CliError::Validation(_) => EXIT_VALIDATION,
            CliError::Precision(_) => EXIT_PRECISION,
            CliError::Internal(_) => 1,
        }
    }

    pub fn io(path: &Path, err: std::io::Error) -> Self {
        CliError::Validation(format!("{}: {err}", path.display()))
    }

    pub fn invalid(msg: impl Into<String>) -> Self {
        CliError::Validation(msg.into())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Internal(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Internal(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Internal(e.to_string())
    }
}

impl From<PrecisionError> for CliError {
    fn from(e: PrecisionError) -> Self {
        CliError::Precision(e.to_string())
    }
}

impl From<NetworkError> for CliError {
    fn from(e: NetworkError) -> Self {
        match e {
            NetworkError::Precision(p) => p.into(),
            other => CliError::Validation(other.to_string()),
        }
    }
}

impl From<SearchError> for CliError {
    fn from(e: SearchError) -> Self {
        match e {
            SearchError::NotFound {
                strategy,
                q_cap,
                scanned,
            } => CliError::NotFound(json!({
                "status": "not_found",
                "strategy": strategy,
                "q_cap": q_cap.to_string(),
                "scanned": scanned,
            })),
            SearchError::Precision(p) => p.into(),
            SearchError::InvalidConfig(msg) => CliError::Validation(msg),
        }
    }
}

impl From<ApproxError> for CliError {
    fn from(e: ApproxError) -> Self {
        match e {
            ApproxError::Search(s) => s.into(),
            ApproxError::Network(n) => n.into(),
            other => CliError::Validation(other.to_string()),
        }
    }
}

impl From<RegressionError> for CliError {
    fn from(e: RegressionError) -> Self {
        match e {
            RegressionError::Network(n) => n.into(),
            other => CliError::Validation(other.to_string()),
        }
    }
}

impl From<FunctionError> for CliError {
    fn from(e: FunctionError) -> Self {
        CliError::Validation(e.to_string())
    }
}
