use thiserror::Error;

/// Errors raised by the analysis pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Malformed input data (non-finite samples, too-short series, bad sampling interval).
    #[error("invalid input: {0}")]
    Input(String),

    /// A parameter is outside its admissible range.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// A level function was queried outside its domain.
    #[error("level {level} is below the spectrum minimum {min}")]
    Domain { level: f64, min: f64 },

    /// The trend solver did not reach its tolerance within the iteration cap.
    #[error("solver did not converge after {iterations} iterations (gap {gap:e}, tolerance {tol:e})")]
    Convergence {
        iterations: usize,
        gap: f64,
        tol: f64,
        best: Vec<f64>,
    },

    #[error("internal error: {0}")]
    Internal(String),

    /// An error raised inside a named pipeline stage.
    #[error("{stage}: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// The innermost error, with stage labels stripped.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            other => other,
        }
    }
}

pub(crate) trait StageExt<T> {
    fn stage(self, stage: &str) -> Result<T>;
}

impl<T> StageExt<T> for Result<T> {
    fn stage(self, stage: &str) -> Result<T> {
        self.map_err(|e| Error::Stage {
            stage: stage.to_string(),
            source: Box::new(e),
        })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
