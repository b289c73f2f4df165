use std::path::PathBuf;

use crate::ode::PlanarState;

/// Errors produced anywhere in the profile pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A graph or arc-length form was evaluated where it is singular.
    #[error("domain error: {0}")]
    Domain(String),

    /// Supplied derivatives do not satisfy the profile equation.
    #[error("inconsistent derivatives: |γ'' − rhs| = {residual:e} exceeds {tolerance:e}")]
    Consistency { residual: f64, tolerance: f64 },

    /// Initial height outside the range where the series seed is trusted.
    #[error("initial height {b} outside the validated series range (|b| ≤ {cap})")]
    SeedRange { b: f64, cap: f64 },

    /// A series coefficient exceeded the configured magnitude cap.
    #[error("series coefficient a_{index} = {value:e} exceeds magnitude cap {cap:e}")]
    SeriesOverflow { index: usize, value: f64, cap: f64 },

    /// The adaptive step size underflowed.
    #[error("step size underflow at s = {}, x = {}, z = {}", .last.s, .last.x, .last.z)]
    StepFailure { last: PlanarState },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid bracket: {0}")]
    BracketInvalid(String),

    /// Bisection could not reach the closure tolerance.
    #[error("no convergence: {reason} (best bracket [{lo}, {hi}], residual {residual:e})")]
    NoConvergence {
        reason: String,
        lo: f64,
        hi: f64,
        residual: f64,
    },

    #[error("closure failure: endpoint mismatch {mismatch:e} exceeds {limit:e}")]
    ClosureFailure { mismatch: f64, limit: f64 },

    /// A check was requested outside its stated hypotheses.
    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures of the numerical pipeline (as opposed to usage errors).
    pub fn is_computational(&self) -> bool {
        !matches!(
            self,
            Error::Config(_) | Error::Parse(_) | Error::Precondition(_)
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
