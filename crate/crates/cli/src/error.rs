use std::fmt;

use qnet_core::scenarios::ScenarioError;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Location {
    pub line: usize,
    pub column: usize,
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}, column {}", self.line, self.column)
    }
}

fn suffix(loc: &Option<Location>) -> String {
    loc.map(|l| format!(" ({l})")).unwrap_or_default()
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("parse error at {at}: {message}")]
    Parse { at: Location, message: String },
    #[error("unknown key '{key}'{}", suffix(.at))]
    UnknownKey { key: String, at: Option<Location> },
    #[error("{field}: expected {expected}, found {found}{}", suffix(.at))]
    UnitMismatch {
        field: String,
        expected: &'static str,
        found: String,
        at: Option<Location>,
    },
    #[error("invalid {field}: {reason}{}", suffix(.at))]
    Invalid {
        field: String,
        reason: String,
        at: Option<Location>,
    },
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
}

impl CliError {
    /// 1 usage, 2 configuration or input, 3 numerical guard.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Scenario(e) if e.is_numerical_guard() => 3,
            _ => 2,
        }
    }

    /// Short tag printed in front of the message on stderr.
    pub fn tag(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Parse { .. } => "parse",
            CliError::UnknownKey { .. } => "unknown-key",
            CliError::UnitMismatch { .. } => "unit",
            CliError::Invalid { .. } => "invalid",
            CliError::Io { .. } => "io",
            CliError::Scenario(e) if e.is_numerical_guard() => "numerical",
            CliError::Scenario(_) => "scenario",
        }
    }
}
