use thiserror::Error;

/// Errors raised across the crate. Numeric payloads are reported as `f64`
/// regardless of the working scalar.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("operator is not Hermitian: asymmetry norm {asymmetry:e} (tolerance {tolerance:e})")]
    NotHermitian { asymmetry: f64, tolerance: f64 },
    #[error("function undefined at eigenvalue {eigenvalue:e}")]
    Domain { eigenvalue: f64 },
    #[error("operator is not positive: eigenvalue {eigenvalue:e} below -{tolerance:e}")]
    NotPositive { eigenvalue: f64, tolerance: f64 },
    #[error("reference state is rank deficient: minimum eigenvalue {min_eigenvalue:e}")]
    RankDeficient { min_eigenvalue: f64 },
    #[error("invalid density matrix: {0}")]
    InvalidState(String),
    #[error("invalid measure: {0}")]
    InvalidMeasure(String),
    #[error("quadrature did not converge: achieved error estimate {estimate:e} (requested {requested:e})")]
    Quadrature { estimate: f64, requested: f64 },
    #[error("argument outside domain: {0}")]
    OutOfDomain(String),
    #[error("internal cross-check failed: {what} residual {residual:e}")]
    CrossCheck { what: String, residual: f64 },
    #[error("reservoir size n={n} out of range 1..=12 (would need {bytes} bytes per operator)")]
    ReservoirTooLarge { n: usize, bytes: u128 },
    #[error("config error at `{field}`: {message}")]
    Config { field: String, message: String },
    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}
