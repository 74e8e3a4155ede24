use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("unsupported matrix dimension {0} (expected 2, 4 or 8)")]
    UnsupportedDimension(usize),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("{what} index {index} out of range")]
    IndexOutOfRange { what: &'static str, index: usize },

    #[error("invalid subsystem selection: {0}")]
    InvalidSubsystems(String),

    #[error("matrix is not Hermitian (max |A - A^dagger| = {0:e})")]
    NotHermitian(f64),

    #[error("not a density matrix: {0}")]
    NotDensityMatrix(String),

    #[error("Jacobi diagonalization did not converge after {0} sweeps")]
    NoConvergence(usize),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("integrator failure: {0}")]
    Integrator(String),

    #[error("state is not an X-state (max stray element {0:e})")]
    NotXState(f64),

    #[error("measurement outcome {0} has zero probability")]
    DegenerateOutcome(usize),

    #[error("non-finite evaluation at {0}")]
    NonFinite(f64),

    #[error("expected a monotone response: {0}")]
    NotMonotone(String),

    #[error("degenerate fit data: {0}")]
    DegenerateData(String),
}

pub type Result<T> = std::result::Result<T, Error>;
