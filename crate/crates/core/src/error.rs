use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("no bosonic factor in {0} space")]
    NoBosonFactor(&'static str),

    #[error("no qubit factor in {0} space")]
    NoQubitFactor(&'static str),

    #[error("space mismatch: {left} vs {right}")]
    SpaceMismatch { left: String, right: String },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("operator is not Hermitian (residual {residual:.3e})")]
    NotHermitian { residual: f64 },

    #[error("eigendecomposition failed: {0}")]
    Eigen(String),

    #[error("expectation of Hermitian operator has imaginary part {imag:.3e}")]
    ImaginaryExpectation { imag: f64 },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("cutoff {cutoff} too small, try at least {suggested}")]
    CutoffTooSmall { cutoff: usize, suggested: usize },

    #[error("imaginary gap (delta = {delta:.6e}); residual undefined as stated")]
    ImaginaryGap { delta: f64 },

    #[error("model {0} has no closed-form gap")]
    NoClosedFormGap(&'static str),

    #[error("isotropic LMG not critical at lambda=1 in this framework")]
    IsotropicLmg,

    #[error("model {0} is not quadratic")]
    NotQuadratic(&'static str),

    #[error("QFI too large for requested delta floor")]
    FidelityStepFloor,

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("parameter derivative must be traceless (trace {trace:.3e})")]
    DerivativeNotTraceless { trace: f64 },

    #[error("step size too large ({reason}); try dt = {suggested_dt:.3e}")]
    StepSizeTooLarge { reason: String, suggested_dt: f64 },

    #[error("truncation not converged up to cutoff {max_cutoff}")]
    NotConverged { max_cutoff: usize },

    #[error("fit error: {0}")]
    Fit(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}
