use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix contains a non-finite entry")]
    NonFinite,

    #[error("{what} violates its symmetry by {residual:.3e} (tolerance {tolerance:.3e})")]
    Symmetry {
        what: &'static str,
        residual: f64,
        tolerance: f64,
    },

    #[error("singular {what}: sigma_min = {sigma_min:.3e}, condition estimate {condition:.3e}")]
    Singular {
        what: &'static str,
        sigma_min: f64,
        condition: f64,
    },

    #[error("singular pencil")]
    SingularPencil,

    #[error("E is not in partitioned form diag(E11, 0): {0}")]
    NotPartitioned(String),

    #[error("minimizing frequency is infinite; destabilizing perturbation undefined")]
    InfiniteFrequency,

    #[error("iteration did not converge after {iterations} steps (residual {residual:.3e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("QZ iteration failed to converge")]
    QzFailure,

    #[error("restored pencil check failed: {0}")]
    Restoration(String),

    #[error("calibration failed: {0}")]
    Calibration(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for failures that come from the numerics rather than from bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Singular { .. }
                | Error::SingularPencil
                | Error::NonConvergence { .. }
                | Error::QzFailure
                | Error::Restoration(_)
                | Error::Calibration(_)
                | Error::InfiniteFrequency
        )
    }
}
