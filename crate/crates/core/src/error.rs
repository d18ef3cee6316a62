//! Error types shared across the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite entry at ({row}, {col}) in {what}")]
    NonFinite {
        what: &'static str,
        row: usize,
        col: usize,
    },

    #[error("shape mismatch: expected {expected}, got {got} ({context})")]
    ShapeMismatch {
        expected: String,
        got: String,
        context: &'static str,
    },

    #[error("ambient dimension mismatch: {left} vs {right}")]
    AmbientMismatch { left: usize, right: usize },

    #[error(
        "subspace containment violated: projection residual {residual:.3e} exceeds {threshold:.3e}"
    )]
    ContainmentViolation { residual: f64, threshold: f64 },

    #[error(
        "invariance violated: S X' ⊄ Y' numerically (residual {residual:.3e} > {threshold:.3e})"
    )]
    InvarianceViolation { residual: f64, threshold: f64 },

    #[error("basis is not orthonormal: deviation {deviation:.3e} exceeds {threshold:.3e}")]
    NotOrthonormal { deviation: f64, threshold: f64 },

    #[error("tolerance pathology: {0}")]
    TolerancePathology(String),

    #[error("pencil is not regular: {0}")]
    NotRegular(String),

    #[error("precondition failed: {0}")]
    PreconditionFailed(String),

    #[error("singular system: {0}")]
    Singular(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("internal error: {0}")]
    Internal(String),
}

impl Error {
    /// True for errors caused by malformed user input rather than numerical trouble.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::NonFinite { .. }
                | Error::ShapeMismatch { .. }
                | Error::AmbientMismatch { .. }
                | Error::Parse(_)
                | Error::Io(_)
                | Error::Json(_)
        )
    }
}
