use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid pattern: {0}")]
    InvalidPattern(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("the zero wavevector has no wall symbol; use the zero-mode rule instead")]
    ZeroWavevector,

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    /// The mask contains no no-slip cell, so the wall is perfectly slipping
    /// and the slip length is infinite.
    #[error("mask has no no-slip cell: perfect slip, the slip length is unbounded")]
    PerfectSlip,

    #[error("mask has no slip cell: the wall is fully no-slip")]
    FullyNoSlip,

    #[error(
        "Krylov solver did not converge after {iterations} iterations (residual {residual:.3e})"
    )]
    NotConverged {
        iterations: usize,
        residual: f64,
        history: Vec<f64>,
    },

    #[error("pattern kind not supported here: {0}")]
    Unsupported(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
