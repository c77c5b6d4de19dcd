use thiserror::Error;

/// Errors produced anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not Hermitian (max |m - m^dagger| = {0:e})")]
    NotHermitian(f64),
    #[error("Hermitian eigensolver did not converge")]
    ConvergenceFailure,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("waveform is identically zero on the requested window")]
    ZeroWaveform,
    #[error("pulse width {width} ns exceeds the interval length {tau} ns")]
    WidthOverflow { width: f64, tau: f64 },
    #[error("sample rate {rate} /ns resolves fewer than 8 samples per {tau} ns interval")]
    ResolutionTooLow { rate: f64, tau: f64 },
    #[error("target integral {target} is outside [{min}, {max}]")]
    Unreachable { target: f64, min: f64, max: f64 },
    #[error("reference propagation did not converge after {0} refinements")]
    NoConvergence(usize),
    #[error("gate matrix is not unitary (deviation {0:e})")]
    NotUnitary(f64),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("malformed input: {0}")]
    Malformed(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for errors caused by unreadable or ill-formed input files.
    pub fn is_input_error(&self) -> bool {
        matches!(self, Error::Malformed(_) | Error::Io(_))
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Malformed(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Malformed(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
