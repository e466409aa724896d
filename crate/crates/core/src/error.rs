use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter or configuration value violates its invariant.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("index {index} out of range for network of {n} neurons")]
    IndexOutOfRange { index: usize, n: usize },

    /// The membrane integrator produced a non-finite potential.
    #[error("non-finite membrane potential at neuron {neuron}, step {step}")]
    NumericOverflow { neuron: usize, step: usize },

    #[error("sweep results incomplete: width {width} missing")]
    IncompleteSweep { width: usize },

    #[error("parse error at line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn parameter(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    /// True for errors caused by invalid input rather than by a failed run.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            Error::Parameter(_)
                | Error::IndexOutOfRange { .. }
                | Error::Parse { .. }
                | Error::Json(_)
        )
    }
}

impl From<csv::Error> for Error {
    fn from(err: csv::Error) -> Self {
        let line = err.position().map(|p| p.line()).unwrap_or(0);
        match err.into_kind() {
            csv::ErrorKind::Io(io) => Error::Io(io),
            kind => Error::Parse {
                line,
                message: format!("{kind:?}"),
            },
        }
    }
}
