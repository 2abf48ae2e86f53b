//! Crate-wide error and violation types.

use thiserror::Error;

/// A single structural problem found by a validator.
///
/// Violations are accumulated rather than raised one at a time, so one
/// validation pass reports every problem it can find.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct Violation {
    /// Where the problem sits (a slot name, field path, or engine name).
    pub subject: String,
    pub message: String,
}

impl Violation {
    pub fn new(subject: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            subject: subject.into(),
            message: message.into(),
        }
    }
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.subject, self.message)
    }
}

#[derive(Debug, Error)]
pub enum FlowError {
    #[error("dataset error: {0}")]
    Dataset(String),

    #[error("parameter error: {0}")]
    Params(String),

    #[error("registry error: {0}")]
    Registry(String),

    #[error("control validation failed with {} violation(s):\n{}", .0.len(),
            .0.iter().map(|v| format!("  - {v}")).collect::<Vec<_>>().join("\n"))]
    Validation(Vec<Violation>),

    #[error("envelope error: {0}")]
    Envelope(String),

    #[error("engine {engine} failed at stage {stage}, fold {fold}: {message}")]
    Engine {
        stage: String,
        fold: usize,
        engine: String,
        message: String,
    },

    #[error("engine output rejected at stage {stage}, fold {fold}, engine {engine}:\n{}",
            .violations.iter().map(|v| format!("  - {v}")).collect::<Vec<_>>().join("\n"))]
    EngineOutput {
        stage: String,
        fold: usize,
        engine: String,
        violations: Vec<Violation>,
    },

    #[error("unserializable value at {0}")]
    Unserializable(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error in {path}: {message}")]
    Parse { path: String, message: String },
}

impl FlowError {
    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        FlowError::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, FlowError>;
