use thiserror::Error;

/// Errors produced by the estimation, simulation and quadrature routines.
#[derive(Debug, Error)]
pub enum SbgError {
    /// A parameter is outside its admissible domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// Root bracketing failed: the target value is unattainable inside the
    /// search interval.
    #[error("no bracket: target not attainable for intensity in [{lo:e}, {hi:e}]")]
    NoBracket { lo: f64, hi: f64 },

    /// A quadrature or series evaluation did not reach the requested accuracy.
    #[error("loss of accuracy: {0}")]
    LossOfAccuracy(String),

    /// The weighted least-squares design matrix is rank deficient
    /// (two exponents coincide).
    #[error("rank-deficient design matrix: coincident exponents")]
    RankDeficient,

    /// No optimizer start converged.
    #[error("optimizer failed: no start converged")]
    OptimizerFailed,

    /// A jump-count query below the simulation floor would undercount with
    /// certainty.
    #[error("threshold {threshold:e} is below the simulation floor {floor:e}")]
    ThresholdBelowFloor { threshold: f64, floor: f64 },

    /// The preliminary estimates contain no usable entry.
    #[error("preliminary estimation failed for every index")]
    PrelimFailed,

    /// The density grid did not reach the requested mass coverage after the
    /// maximum number of doublings.
    #[error("density grid expansion did not converge after {0} doublings")]
    GridExpansion(u32),

    /// A configuration file or value is invalid.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("config parse error at line {line}, column {column}: {message}")]
    ConfigParse {
        line: usize,
        column: usize,
        message: String,
    },
}

impl From<serde_json::Error> for SbgError {
    fn from(err: serde_json::Error) -> Self {
        SbgError::ConfigParse {
            line: err.line(),
            column: err.column(),
            message: err.to_string(),
        }
    }
}

pub type Result<T> = std::result::Result<T, SbgError>;
