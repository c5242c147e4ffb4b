use thiserror::Error;

/// Broad classes of failure, used by front-ends to pick an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Malformed input: wrong shape, non-finite entries, unsupported body.
    Validation,
    /// Input is well formed but violates a mathematical precondition.
    Precondition,
    /// A computed result failed its own certificate.
    Verification,
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("matrix is not positive definite: smallest eigenvalue {min_eigenvalue:e} below floor {floor:e}")]
    NotPositiveDefinite { min_eigenvalue: f64, floor: f64 },

    #[error("matrix has odd dimension {dim}; a 2n x 2n block split is required")]
    DimensionOdd { dim: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not symmetric: max |m_ij - m_ji| = {deviation:e}")]
    Asymmetric { deviation: f64 },

    #[error("non-finite entry in input matrix")]
    NonFinite,

    #[error("spectrum has negative eigenvalue {eigenvalue:e}")]
    NegativeSpectrum { eigenvalue: f64 },

    #[error("matrix is not diagonalizable with real spectrum (square-root residual {residual:e})")]
    NotDiagonalizable { residual: f64 },

    #[error("matrix exponential overflow: |tM| = {norm:e} exceeds 1e3")]
    Infinite { norm: f64 },

    #[error("generator matrix L is singular (|det L| = {det:e})")]
    SingularL { det: f64 },

    #[error("matrix is not symplectic: |S^T J S - J| = {residual:e}")]
    NotSymplectic { residual: f64 },

    #[error("polar duality is only defined between position and momentum spaces")]
    PhaseSpaceBody,

    #[error("degree-of-freedom index {index} out of range 1..={n}")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("quantum condition violated: smallest symplectic eigenvalue {nu_min:e} < hbar/2 = {half_hbar:e}")]
    QuantumConditionViolated { nu_min: f64, half_hbar: f64 },

    #[error("state is not pure: symplectic eigenvalues deviate from hbar/2 by {deviation:e}")]
    NotPure { deviation: f64 },

    #[error("residual of {what} too large: {residual:e}")]
    ResidualTooLarge { what: &'static str, residual: f64 },

    #[error("sub-Heisenberg shadows: sigma_xx * sigma_pp = {product:e} < hbar^2/4 = {bound:e}")]
    SubHeisenberg { product: f64, bound: f64 },

    #[error("not a quantum dual pair: largest eigenvalue of AB is {lambda_max:e} > 1")]
    NotQuantumPair { lambda_max: f64 },

    #[error("verification failed for {what}: residual {residual:e}")]
    VerificationFailed { what: &'static str, residual: f64 },

    #[error("unsupported body for {op}")]
    UnsupportedBody { op: &'static str },

    #[error("degenerate bounding box (half-width {half_width:e})")]
    DegenerateBox { half_width: f64 },

    #[error("space mismatch: body lives in {body} space, state side is {side}")]
    SpaceMismatch { body: &'static str, side: &'static str },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        use Error::*;
        match self {
            DimensionOdd { .. }
            | DimensionMismatch { .. }
            | Asymmetric { .. }
            | NonFinite
            | PhaseSpaceBody
            | IndexOutOfRange { .. }
            | UnsupportedBody { .. }
            | DegenerateBox { .. }
            | SpaceMismatch { .. }
            | InvalidArgument(_) => ErrorKind::Validation,
            NotPositiveDefinite { .. }
            | NegativeSpectrum { .. }
            | NotDiagonalizable { .. }
            | SingularL { .. }
            | QuantumConditionViolated { .. }
            | NotPure { .. }
            | SubHeisenberg { .. }
            | NotQuantumPair { .. } => ErrorKind::Precondition,
            Infinite { .. }
            | NotSymplectic { .. }
            | ResidualTooLarge { .. }
            | VerificationFailed { .. } => ErrorKind::Verification,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
