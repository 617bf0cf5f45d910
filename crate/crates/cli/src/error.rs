use thiserror::Error;

/// Failures of a CLI command, each mapped to a process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("cannot write {path}: {reason}")]
    Output { path: String, reason: String },
    #[error("acceptance failed: {0}")]
    Acceptance(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Numeric(_) | CliError::Output { .. } => 2,
            CliError::Acceptance(_) => 3,
        }
    }
}

impl From<sticky_heat::Error> for CliError {
    fn from(e: sticky_heat::Error) -> Self {
        if e.is_config() {
            CliError::Config(e.to_string())
        } else {
            CliError::Numeric(e.to_string())
        }
    }
}
