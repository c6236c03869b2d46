use std::path::PathBuf;

use thermal_hbt_core::apparatus::ConfigError;
use thermal_hbt_core::correlation::CorrelationError;
use thermal_hbt_core::events::EventsError;

#[derive(Debug, thiserror::Error)]
pub enum ConfigFileError {
    #[error("{origin}: expected `key = value`")]
    Syntax { origin: String },
    #[error("{origin}: unknown key `{key}`")]
    UnknownKey { key: String, origin: String },
    #[error("{origin}: cannot parse `{value}` for `{key}`")]
    BadValue { key: String, value: String, origin: String },
    #[error("{0}; violated invariant: {inv}", inv = .0.invariant())]
    Invalid(ConfigError),
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum CsvError {
    #[error("empty CSV")]
    Empty,
    #[error("unexpected header `{found}`, expected `{expected}`")]
    Header { found: String, expected: &'static str },
    #[error("line {line}: {reason}")]
    Row { line: usize, reason: String },
}

#[derive(Debug, thiserror::Error)]
pub enum AppError {
    #[error("config: {0}")]
    Config(#[from] ConfigFileError),
    #[error("CSV: {0}")]
    Csv(#[from] CsvError),
    #[error("scan: {0}")]
    Correlation(#[from] CorrelationError),
    #[error("events: {0}")]
    Events(#[from] EventsError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Usage(String),
}

impl AppError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        AppError::Io {
            path: path.into(),
            source,
        }
    }

    /// 2 for invalid input, 3 for I/O failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            AppError::Io { .. } => 3,
            _ => 2,
        }
    }
}
