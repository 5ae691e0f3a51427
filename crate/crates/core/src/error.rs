use thiserror::Error;

/// Errors raised by schedule evaluation, propagation and analysis.
#[derive(Debug, Error)]
pub enum Error {
    #[error("time {t} is outside the schedule domain [0, {total}]")]
    OutOfDomain { t: f64, total: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("state norm {norm} differs from 1 by more than {tol:e}")]
    NotNormalized { norm: f64, tol: f64 },

    #[error("no convergence within {max_steps} steps (last refinement difference {last_diff:e})")]
    NoConvergence { max_steps: usize, last_diff: f64 },

    #[error("degenerate spectrum at t = {t} (gap {gap:e})")]
    DegenerateSpectrum { t: f64, gap: f64 },

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("no qualifying minimum of dP-/dt found in the first half of the protocol")]
    DetectionFailed,

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("localization factor |eta| = {0} is not below 1")]
    OutOfRegime(f64),

    #[error("time-averaged coupling vanishes")]
    ZeroAverage,

    #[error("config: {0}")]
    Config(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for failures that stem from numerical convergence rather than bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NoConvergence { .. }
                | Error::DegenerateSpectrum { .. }
                | Error::DetectionFailed
                | Error::InvalidState(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
