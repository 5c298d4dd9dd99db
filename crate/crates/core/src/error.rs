use thiserror::Error;

/// Errors produced by the numerical kernels.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("no convergence after {iterations} iterations (last residual {last:.3e})")]
    Convergence {
        iterations: usize,
        last: f64,
        history: Vec<f64>,
    },

    #[error("shooting oracle failed: {message} (tried [{lo:.6e}, {hi:.6e}])")]
    Oracle { message: String, lo: f64, hi: f64 },

    #[error("mesh deformation inverted triangle {triangle} at t = {t}")]
    Deformation { triangle: usize, t: f64 },

    #[error("invalid mesh: {0}")]
    Mesh(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn convergence(history: Vec<f64>) -> Self {
        Error::Convergence {
            iterations: history.len(),
            last: history.last().copied().unwrap_or(f64::NAN),
            history,
        }
    }

    /// True for failures of a numerical method as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Convergence { .. } | Error::Oracle { .. } | Error::Deformation { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
