use thiserror::Error;

/// Errors raised by the grid, solver, rescaling and diagnostic layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum FlowError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("{what} = {value} is outside [{lo}, {hi}]")]
    Range {
        what: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("undefined at {0}")]
    UndefinedPoint(f64),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("newton iteration failed after {iterations} iterations (residual {residual:.3e})")]
    StepRejected { iterations: usize, residual: f64 },

    #[error("t = {t} is at or past the extinction estimate {t_est}")]
    PastExtinction { t: f64, t_est: f64 },

    #[error("stiffness failure at t = {t}: dt fell below {dt_min:e}")]
    Stiffness { t: f64, dt_min: f64 },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("io error: {0}")]
    Io(String),

    #[error("format error: {0}")]
    Format(String),
}

impl From<std::io::Error> for FlowError {
    fn from(e: std::io::Error) -> Self {
        FlowError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, FlowError>;
