use thiserror::Error;

/// Errors raised by the numerical engines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid interval [{a}, {b}]: lower bound must be below upper bound")]
    InvalidInterval { a: f64, b: f64 },

    #[error("integrand returned a non-finite value at x = {x}")]
    NonFinite { x: f64 },

    #[error("kernel is singular at r' = {r_prime}, q = {q}, phi = {phi}")]
    SingularKernel { r_prime: f64, q: f64, phi: f64 },

    #[error("Fourier coefficient diverges on the diagonal r' = q = {0}")]
    DiagonalSingularity(f64),

    #[error("no admissible partner index for l = {l}, alpha = {alpha}, l' = {l_out}")]
    InconsistentSelection { l: i32, alpha: i32, l_out: i32 },

    #[error("tolerance {tol} is below the {min} floor of the direct oracle; use the expansion engine")]
    ToleranceTooTight { tol: f64, min: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("did not converge: {0}")]
    NonConvergence(String),

    #[error("degenerate dichroism denominator: both totals are below 1e-30")]
    DegenerateDenominator,

    #[error("kernel table: {0}")]
    Table(String),

    #[error(transparent)]
    Io(#[from] IoError),
}

/// `std::io::Error` is neither `Clone` nor `PartialEq`; keep the message only.
#[derive(Debug, Error, Clone, PartialEq)]
#[error("{0}")]
pub struct IoError(pub String);

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(IoError(e.to_string()))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
