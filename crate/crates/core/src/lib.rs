//! Online threshold assignment of sequentially arriving jobs to workers.
//!
//! A job of value `x` assigned to a worker of rate `p` earns one unit of
//! reward when `f(x, p) >= α`. When `f` ranks workers the same way for every
//! job value (order-preserving), the greedy rule is optimal: give each job to
//! the available worker with the smallest `f(x, p)` that still meets `α`,
//! and reject the job if there is none.
//!
//! - [`policy`]: the greedy policy, streaming arrivals, workers that cycle back.
//! - [`function`]: threshold functions and the order-preserving check.
//! - [`oracle`]: offline optima by enumeration and bipartite matching.
//! - [`analysis`]: job loads, feasible extremes and reward-maximizing job mixtures.
//! - [`multilevel`]: prioritized cascades of worker pools.
//! - [`dsstap`]: random worker rates and probability-weighted matching.
//! - [`cli`]: JSON-configured runs with JSON and CSV output.

// Negated comparisons reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod cli;
pub mod dsstap;
pub mod error;
pub mod function;
pub mod model;
pub mod multilevel;
pub mod oracle;
pub mod policy;
pub mod rng;

pub use error::{Error, Result};
pub use function::{Domain, ThresholdFunction};
pub use model::{AssignmentRecord, Instance, Job, Outcome, Worker};
pub use policy::{run_stream, PolicyOptions, PolicyState};
