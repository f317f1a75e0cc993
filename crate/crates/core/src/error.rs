use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("case schema violation: {0}")]
    Schema(String),

    #[error("dangling reference: {0}")]
    DanglingReference(String),

    #[error("zero-impedance in-service branch {index} ({from}-{to})")]
    ZeroImpedanceBranch { index: usize, from: u32, to: u32 },

    #[error("no slack bus")]
    NoSlackBus,

    #[error("multiple slack buses")]
    MultipleSlackBuses,

    #[error("invalid case: {0}")]
    InvalidCase(String),

    #[error("singular Jacobian at iteration {iteration}")]
    SingularJacobian { iteration: usize },

    #[error("dispatch exceeds device rating: {0}")]
    DispatchExceedsRating(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("generator {index} at bus {bus} operates outside its rating: {detail}")]
    OutsideRating { index: usize, bus: u32, detail: String },

    #[error("singular network matrix at t = {t:.4} s")]
    SingularNetwork { t: f64 },

    #[error("non-finite value at t = {t:.4} s: {what}")]
    NonFinite { t: f64, what: String },

    #[error("cooling capacity exceeded: demand {demand_mw:.3} MW-th > bank capacity {capacity_mw:.3} MW-th")]
    CoolingCapacityExceeded { demand_mw: f64, capacity_mw: f64 },

    #[error("{path}: line {line}: {message}")]
    Csv { path: String, line: u64, message: String },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// Short machine-readable tag, used by the CLI's error JSON.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Io { .. } => "io",
            Error::Schema(_) => "schema",
            Error::DanglingReference(_) => "dangling_reference",
            Error::ZeroImpedanceBranch { .. } => "zero_impedance_branch",
            Error::NoSlackBus => "no_slack_bus",
            Error::MultipleSlackBuses => "multiple_slack_buses",
            Error::InvalidCase(_) => "invalid_case",
            Error::SingularJacobian { .. } => "singular_jacobian",
            Error::DispatchExceedsRating(_) => "dispatch_exceeds_rating",
            Error::InvalidArgument(_) => "invalid_argument",
            Error::OutsideRating { .. } => "outside_rating",
            Error::SingularNetwork { .. } => "singular_network",
            Error::NonFinite { .. } => "non_finite",
            Error::CoolingCapacityExceeded { .. } => "cooling_capacity_exceeded",
            Error::Csv { .. } => "csv",
            Error::Json(_) => "json",
        }
    }
}
