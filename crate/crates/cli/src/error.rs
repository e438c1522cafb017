//! CLI error classification and exit codes.

use std::fmt;

/// Exit codes: 0 success, 1 validation error, 2 stage failure,
/// 3 acceptance check failure.
#[derive(Debug)]
pub enum CliError {
    /// Bad configuration or malformed input flagged before any work runs.
    Validation(String),
    /// A pipeline stage failed; stage 0 is input loading.
    Stage {
        stage: usize,
        name: &'static str,
        message: String,
    },
    /// A check command (gradcheck) ran fine but did not pass.
    Acceptance(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Stage { .. } => 2,
            CliError::Acceptance(_) => 3,
        }
    }

    pub fn stage(stage: usize, name: &'static str, err: impl fmt::Display) -> Self {
        CliError::Stage {
            stage,
            name,
            message: err.to_string(),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Validation(msg) => write!(f, "validation error: {msg}"),
            CliError::Stage {
                stage,
                name,
                message,
            } => write!(f, "stage {stage} ({name}) failed: {message}"),
            CliError::Acceptance(msg) => write!(f, "check failed: {msg}"),
        }
    }
}

impl std::error::Error for CliError {}
