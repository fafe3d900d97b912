//! Error type shared by the command drivers.
//!
//! Failures split into three kinds with fixed exit codes: `usage` and
//! `io` exit with 2, `numeric` (estimation failed on valid input) exits
//! with 1. Each error renders as one line of JSON for scripting.

use std::fmt;

/// A command failed.
#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    /// Bad flags, parameter values, or names.
    Usage(String),
    /// A file could not be read, parsed, validated, or written.
    Io {
        /// The offending path.
        path: String,
        /// What went wrong with it.
        message: String,
    },
    /// Estimation failed numerically.
    Numeric(String),
}

impl CliError {
    /// Stable kind tag used in the JSON rendering.
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Io { .. } => "io",
            CliError::Numeric(_) => "numeric",
        }
    }

    /// Process exit code: 2 for usage and IO problems, 1 for numerical
    /// failure.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Io { .. } => 2,
            CliError::Numeric(_) => 1,
        }
    }

    /// One-line JSON rendering, `{"error": <kind>, "message": ...}`, with
    /// a `path` field for IO errors.
    pub fn to_json(&self) -> String {
        let mut doc = serde_json::json!({
            "error": self.kind(),
            "message": self.to_string(),
        });
        if let CliError::Io { path, .. } = self {
            doc["path"] = serde_json::Value::String(path.clone());
        }
        doc.to_string()
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Numeric(m) => f.write_str(m),
            CliError::Io { path, message } => write!(f, "{path}: {message}"),
        }
    }
}

impl std::error::Error for CliError {}
