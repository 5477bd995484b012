use std::fmt;
use std::path::Path;

/// Pipeline failure, tagged with the stage that raised it.
#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    Validation { stage: &'static str, message: String },
    Unsatisfiable { teams: Vec<String> },
    Io { path: String, message: String },
}

impl CliError {
    pub fn validation(stage: &'static str, err: impl fmt::Display) -> Self {
        CliError::Validation {
            stage,
            message: err.to_string(),
        }
    }

    pub fn io(path: &Path, err: impl fmt::Display) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            message: err.to_string(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation { .. } => 2,
            CliError::Unsatisfiable { .. } => 3,
            CliError::Io { .. } => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Validation { stage, message } => write!(f, "[{stage}] {message}"),
            CliError::Unsatisfiable { teams } => {
                write!(f, "[plan] unsatisfiable in this terrain for: {}", teams.join(", "))
            }
            CliError::Io { path, message } => write!(f, "[io] {path}: {message}"),
        }
    }
}

impl std::error::Error for CliError {}
