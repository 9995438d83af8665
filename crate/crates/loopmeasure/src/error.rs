use thiserror::Error;

use crate::birkhoff::StratumReport;

/// Errors raised across the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("loop is singular on the circle (min |det| = {min_det:e})")]
    SingularOnCircle { min_det: f64 },

    #[error("loop is outside the top stratum (Toeplitz condition {})", .0.toeplitz_condition)]
    LowerStratum(StratumReport),

    #[error("factorization residual {residual:e} exceeds tolerance {tol:e}")]
    ResidualExceeded { residual: f64, tol: f64 },

    #[error("D_{index} vanishes, B'_{} is undefined", index + 1)]
    DegenerateDn { index: usize },

    #[error("degenerate input: {0}")]
    Degenerate(&'static str),

    #[error("path step angle {angle} is outside the logarithm injectivity radius")]
    StepTooLarge { angle: f64 },

    #[error("heat-kernel series with {n_max} terms leaves tail {tail:e} at t = {t}")]
    TruncationInsufficient { t: f64, n_max: usize, tail: f64 },

    #[error("bridge rejection exceeded {retries} retries at step {step}")]
    RejectionStall { step: usize, retries: usize },

    #[error("out-of-window spectral mass {fraction:.4} exceeds {limit}")]
    AliasingExcessive { fraction: f64, limit: f64 },

    #[error("quadrature did not converge (estimated error {error:e})")]
    QuadratureNonconvergent { error: f64 },

    #[error("density cannot be normalized: {0}")]
    UnnormalizableTag(String),

    #[error("finite differences disagree across step sizes (relative spread {spread:e})")]
    StepSizeUnstable { spread: f64 },

    #[error("need at least {needed} samples, got {got}")]
    InsufficientSamples { needed: usize, got: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Variant name, used as a machine-readable cause in records.
    pub fn kind(&self) -> String {
        let debug = format!("{self:?}");
        debug.split(|c: char| !c.is_alphanumeric()).next().unwrap_or_default().to_string()
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
