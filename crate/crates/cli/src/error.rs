use std::fmt;
use std::path::Path;

use ctxaug_core::{BuildError, DatasetError, EvalError, RunError, ScenarioError, TransformError};
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    /// Bad flags, config file or input content.
    Invalid,
    Io,
}

#[derive(Debug)]
pub struct CliError {
    pub kind: Kind,
    pub message: String,
}

impl CliError {
    pub fn invalid(message: impl Into<String>) -> Self {
        Self {
            kind: Kind::Invalid,
            message: message.into(),
        }
    }

    pub fn io(path: &Path, e: impl fmt::Display) -> Self {
        Self {
            kind: Kind::Io,
            message: format!("{}: {e}", path.display()),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self.kind {
            Kind::Invalid => 1,
            Kind::Io => 2,
        }
    }

    pub fn to_json_line(&self) -> String {
        serde_json::json!({
            "error": self.kind,
            "exit_code": self.exit_code(),
            "message": self.message,
        })
        .to_string()
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

fn classify(io: bool, e: impl fmt::Display) -> CliError {
    CliError {
        kind: if io { Kind::Io } else { Kind::Invalid },
        message: e.to_string(),
    }
}

impl From<DatasetError> for CliError {
    fn from(e: DatasetError) -> Self {
        classify(matches!(e, DatasetError::Io { .. }), e)
    }
}

impl From<RunError> for CliError {
    fn from(e: RunError) -> Self {
        classify(e.is_io(), e)
    }
}

impl From<BuildError> for CliError {
    fn from(e: BuildError) -> Self {
        classify(matches!(e, BuildError::Dataset(DatasetError::Io { .. })), e)
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        let io = match &e {
            EvalError::Csv(c) => c.is_io_error(),
            EvalError::Dataset(DatasetError::Io { .. }) => true,
            _ => false,
        };
        classify(io, e)
    }
}

impl From<ScenarioError> for CliError {
    fn from(e: ScenarioError) -> Self {
        classify(false, e)
    }
}

impl From<TransformError> for CliError {
    fn from(e: TransformError) -> Self {
        classify(false, e)
    }
}
