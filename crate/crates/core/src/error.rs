use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("integration step {step} ns exceeds the stability limit {limit} ns")]
    StepTooLarge { step: f64, limit: f64 },

    #[error("undefined input: {0}")]
    UndefinedInput(&'static str),

    #[error("trajectory covers [{start}, {end}] ns but the histogram needs [{need_start}, {need_end}] ns")]
    TrajectoryTooShort {
        start: f64,
        end: f64,
        need_start: f64,
        need_end: f64,
    },

    #[error("histogram grids differ")]
    GridMismatch,

    #[error("no oscillation above the noise floor")]
    NoOscillation,

    #[error("not enough data: {0}")]
    InsufficientData(String),

    #[error("fit failed: {0}")]
    FitFailed(String),

    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    /// True for errors caused by user input (config, parameters) rather than
    /// by a run or fit failing.
    pub fn is_usage_error(&self) -> bool {
        matches!(
            self,
            Error::Config { .. } | Error::InvalidParameter(_) | Error::UndefinedInput(_)
        )
    }
}
