use num_complex::Complex64;
use thiserror::Error;

/// Errors raised by the core algorithms.
#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid frequency grid: {0}")]
    Grid(String),

    #[error("frequency {0} is not on the grid")]
    OffGrid(f64),

    #[error("sample at omega = 0 has imaginary part {imag:.3e}; the time-domain kernel is real so it must vanish")]
    NotRealAtDc { imag: f64 },

    #[error("not conjugate symplectic: residual {residual:.3e} exceeds {tolerance:.3e}")]
    NotInGroup { residual: f64, tolerance: f64 },

    #[error("not in the conjugate-symplectic algebra: residual {0:.3e}")]
    NotInAlgebra(f64),

    #[error("matrix is not unitary: residual {0:.3e}")]
    NotUnitary(f64),

    #[error("matrix is not Hermitian: residual {0:.3e}")]
    NotHermitian(f64),

    #[error("matrix is not positive definite: smallest eigenvalue {0:.3e}")]
    NotPositiveDefinite(f64),

    #[error("logarithm undefined: eigenvalue {0} lies on the negative real axis")]
    LogBranch(Complex64),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("pole at omega = {omega}: distance {distance:.3e}")]
    Pole { omega: f64, distance: f64 },

    #[error("numerical failure: {0}")]
    Numeric(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("at omega = {omega} (index {index}): {source}")]
    AtFrequency {
        index: usize,
        omega: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("{} frequencies failed, first: {}", .0.len(), .0.first().map(|e| e.to_string()).unwrap_or_default())]
    Frequencies(Vec<Error>),

    #[error("schema violation: {0}")]
    Schema(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Coarse classification used by front ends to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Schema,
    Numeric,
    Guard,
}

impl Error {
    pub(crate) fn at(index: usize, omega: f64, source: Error) -> Self {
        Error::AtFrequency { index, omega, source: Box::new(source) }
    }

    /// Strips per-frequency wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtFrequency { source, .. } => source.root(),
            Error::Frequencies(v) if !v.is_empty() => v[0].root(),
            e => e,
        }
    }

    pub fn class(&self) -> ErrorClass {
        match self.root() {
            Error::Schema(_) | Error::Json(_) | Error::Io(_) | Error::Shape(_) | Error::Grid(_) => {
                ErrorClass::Schema
            }
            Error::Pole { .. } | Error::Degenerate(_) | Error::LogBranch(_) => ErrorClass::Guard,
            _ => ErrorClass::Numeric,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
