use std::path::PathBuf;

/// A failure in one named stage of a subcommand.
#[derive(Debug, thiserror::Error)]
#[error("{stage}: {message}")]
pub struct CliError {
    pub stage: String,
    pub message: String,
}

impl CliError {
    pub fn new(stage: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            stage: stage.into(),
            message: message.into(),
        }
    }

    pub fn io(stage: &'static str, path: &PathBuf, err: std::io::Error) -> Self {
        Self::new(stage, format!("{}: {err}", path.display()))
    }
}

pub type CliResult<T> = Result<T, CliError>;

pub trait Stage<T> {
    fn stage(self, stage: &'static str) -> CliResult<T>;
}

impl<T, E: std::fmt::Display> Stage<T> for Result<T, E> {
    fn stage(self, stage: &'static str) -> CliResult<T> {
        self.map_err(|e| CliError::new(stage, e.to_string()))
    }
}

/// Keeps the pipeline's own stage label when it has one.
impl From<hffeat::Error> for CliError {
    fn from(e: hffeat::Error) -> Self {
        match e {
            hffeat::Error::Stage { stage, source } => CliError::new(stage, source.to_string()),
            other => CliError::new("analysis", other.to_string()),
        }
    }
}
