use std::fmt;

use sbc_core::certificates::CertError;
use sbc_core::dp::DpError;
use sbc_core::model::ModelError;

/// Failures mapped to exit codes: configuration 2, numerical 3.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Config(_) => 2,
            Self::Numerical(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Config(m) if m.starts_with("configuration error") => f.write_str(m),
            Self::Config(m) => write!(f, "configuration error: {m}"),
            Self::Numerical(m) => write!(f, "numerical error: {m}"),
        }
    }
}

impl From<CertError> for CliError {
    fn from(e: CertError) -> Self {
        match e {
            CertError::Sdp(_) => Self::Numerical(e.to_string()),
            _ => Self::Config(e.to_string()),
        }
    }
}

impl From<DpError> for CliError {
    fn from(e: DpError) -> Self {
        Self::Config(e.to_string())
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        Self::Config(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::Config(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        Self::Config(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        Self::Config(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Result of a command that ran to completion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Pass,
    CheckFailed,
}
