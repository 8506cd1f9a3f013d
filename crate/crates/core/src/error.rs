use thiserror::Error;

/// Errors raised by the kernels, the curve machinery and the simulator.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("non-finite matrix")]
    NonFinite,

    #[error("principal branch undefined")]
    PrincipalBranchUndefined,

    #[error("singular matrix")]
    Singular,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("not in algebra span (residual {residual:.3e})")]
    NotInAlgebraSpan { residual: f64 },

    #[error("objective non-finite")]
    ObjectiveNonFinite,

    #[error("boundary logarithm")]
    BoundaryLogarithm,

    #[error("off-group sample {index} (residual {residual:.3e})")]
    OffGroupSample { index: usize, residual: f64 },

    #[error("element is not on the group (residual {residual:.3e})")]
    OffGroup { residual: f64 },

    #[error("improper parametrization at sample {index} (|xi_d| = {norm:.3e})")]
    ImproperParametrization { index: usize, norm: f64 },

    #[error("curve needs at least 3 samples, got {0}")]
    TooFewSamples(usize),

    #[error("on curve")]
    OnCurve,

    #[error("ambiguous minimizer")]
    AmbiguousMinimizer,

    #[error("manifold drift (residual {residual:.3e})")]
    ManifoldDrift { residual: f64 },

    #[error("errors undefined for this group")]
    UndefinedForGroup,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::InvalidConfig(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
