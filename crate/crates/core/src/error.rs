use thiserror::Error;

use crate::function::OrderWitness;
use crate::model::{JobId, WorkerId};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("job value {x} lies outside the domain [{lo}, {hi}]")]
    Domain { x: f64, lo: f64, hi: f64 },

    #[error("ratio threshold function evaluated at non-positive job value {x}")]
    RatioAtNonPositive { x: f64 },

    #[error("tabulated function has no entry for ({job}, {worker})")]
    MissingEntry { job: JobId, worker: WorkerId },

    #[error("worker {0} is assigned more than once")]
    DuplicateWorker(WorkerId),

    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("threshold function is not order-preserving: {0}")]
    OrderViolation(Box<OrderWitness>),

    #[error("arrival time {arrival} precedes the policy clock {clock}")]
    TimeReversal { arrival: f64, clock: f64 },

    #[error("exhaustive search limited to {limit} jobs and workers, got {jobs} jobs and {workers} workers")]
    TooLarge {
        jobs: usize,
        workers: usize,
        limit: usize,
    },

    #[error("no job value in [{lo}, {hi}] meets threshold {alpha} for rate {rate}")]
    Infeasible {
        rate: f64,
        alpha: f64,
        lo: f64,
        hi: f64,
    },

    #[error("threshold function has no declared monotonicity in the job value")]
    NotMonotone,

    #[error("closed-form and bisection extremes disagree: {closed} vs {bisected}")]
    Numerical { closed: f64, bisected: f64 },

    #[error("mixture center {center} is not strictly inside [{lo}, {hi}]")]
    BadEpsilon { center: f64, lo: f64, hi: f64 },

    #[error("invalid distribution: {0}")]
    BadSpec(String),

    #[error("levels are not comparable with a flat pool: {0}")]
    IncomparableLevels(String),

    #[error("invalid config field `{field}`: {message}")]
    Config { field: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }
}
