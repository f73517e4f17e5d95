use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("empty sample set: {0}")]
    EmptySample(&'static str),

    #[error("loss `{0}` is not symmetric; the PU/NU estimators require l(t,+1) + l(t,-1) = 1")]
    AsymmetricLoss(&'static str),

    #[error("calibration check failed at pi_plus = {pi_plus}, g = {g}: {reason}")]
    CalibrationFailure {
        pi_plus: f64,
        g: f64,
        reason: String,
    },

    #[error("not enough {class} rows in pool: needed {needed}, have {available}")]
    PoolExhausted {
        class: &'static str,
        needed: usize,
        available: usize,
    },

    #[error("csv error in {path}: {message}")]
    Csv { path: PathBuf, message: String },

    #[error("{mode} training needs the {set} sample set, which is empty")]
    MissingSample {
        mode: crate::Mode,
        set: &'static str,
    },

    #[error("objective became non-finite ({value}) at outer iteration {outer}")]
    NonFiniteObjective { value: f64, outer: usize },

    #[error("inner solver diverged: objective increased for {streak} consecutive steps (last values {trace:?})")]
    Divergence { streak: usize, trace: Vec<f64> },

    #[error("CCCP objective increased from {before} to {after} at outer iteration {outer}")]
    MonotonicityViolation {
        before: f64,
        after: f64,
        outer: usize,
    },

    #[error("inconsistent ratios: rho_pn = {rho_pn} but rho_pu / rho_nu = {implied}")]
    InconsistentRatios { rho_pn: f64, implied: f64 },

    #[error("row {row} has norm {norm} which exceeds c_phi = {c_phi}")]
    NormViolation { row: usize, norm: f64, c_phi: f64 },

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn context(self, context: impl Into<String>) -> Error {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }
}
