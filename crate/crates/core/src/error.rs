use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("matrix is not Hermitian: max |M - M^H| = {deviation:.3e}")]
    NotHermitian { deviation: f64 },

    #[error("matrix is not positive semi-definite: min eigenvalue {min_eigenvalue:.3e}")]
    NotPsd { min_eigenvalue: f64 },

    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("spectral density `{kind}` has no cut-off; the exact cumulant integral diverges")]
    CutoffRequired { kind: &'static str },

    #[error("bath violates the thermal decay condition: {reason}")]
    DecayCondition { reason: String },

    #[error(
        "quadrature did not converge on [{lo:.6e}, {hi:.6e}]: achieved {achieved:.3e}, requested {requested:.3e}"
    )]
    Quadrature {
        lo: f64,
        hi: f64,
        achieved: f64,
        requested: f64,
    },

    #[error("invalid density matrix: {reason}")]
    InvalidState { reason: String },

    #[error(
        "state at t = {time} violates physicality: trace defect {trace_defect:.3e}, min eigenvalue {min_eigenvalue:.3e}"
    )]
    Invariant {
        time: f64,
        trace_defect: f64,
        min_eigenvalue: f64,
    },
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Quadrature { .. })
    }

    pub fn is_invariant_violation(&self) -> bool {
        matches!(self, Error::Invariant { .. })
    }
}
