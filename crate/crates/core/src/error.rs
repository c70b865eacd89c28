//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum AffineError {
    /// Inconsistent array or matrix dimensions in the inputs.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// A structurally invalid parameter set (e.g. non-symmetric matrix where
    /// a symmetric one is required, negative shape parameter).
    #[error("structural error: {0}")]
    Structure(String),

    /// An argument outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A configuration value outside its documented range.
    #[error("configuration error: {0}")]
    Config(String),

    /// Step size collapsed without norm growth; the problem looks stiff
    /// rather than explosive.
    #[error("stiffness detected at t = {t}: step size collapsed to {h} without norm growth")]
    Stiff { t: f64, h: f64 },

    /// A jump distribution lacks the polynomial moments required.
    #[error("moment-domain error: jump spec `{spec}` lacks moments of order {order}")]
    MomentDomain { spec: String, order: usize },

    /// A parameter combination the operation does not support.
    #[error("unsupported parameterization: {0}")]
    Unsupported(String),

    /// A diagnostic could not reach a verdict; details explain why.
    #[error("inconclusive: {0}")]
    Inconclusive(String),
}

pub type Result<T> = std::result::Result<T, AffineError>;
