//! Error type shared across the laboratory.

/// Failure modes surfaced by constructors and checks.
///
/// Numerical routines prefer returning residuals; errors are reserved for
/// violated preconditions and genuinely singular inputs.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("matrix does not square to -1 (residual {residual:.3e})")]
    NotAlmostComplex { residual: f64 },

    #[error("endomorphism does not anticommute with the structure (residual {residual:.3e})")]
    NotTangent { residual: f64 },

    #[error("metric is not symmetric positive definite")]
    BadMetric,

    #[error("structure does not preserve the metric (residual {residual:.3e})")]
    NotOrthogonal { residual: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("plane is not transverse to the chart anchor (relative gap {gap:.3e})")]
    NotTransverse { gap: f64 },

    #[error("point lies outside the chart domain")]
    OutsideDomain,

    #[error("singular linear system: {0}")]
    Singular(String),

    #[error("unknown gallery case `{0}`")]
    UnknownCase(String),
}

pub type Result<T> = core::result::Result<T, Error>;
