//! Jobs, workers, assignment records and the reward they accumulate.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::function::ThresholdFunction;

/// Position of a job in its arrival sequence, starting at 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct JobId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct WorkerId(pub usize);

impl fmt::Display for JobId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "x{}", self.0)
    }
}

impl fmt::Display for WorkerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "p{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Job {
    pub id: JobId,
    pub value: f64,
}

impl Job {
    pub fn new(id: usize, value: f64) -> Self {
        Job {
            id: JobId(id),
            value,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "state", rename_all = "snake_case")]
pub enum WorkerState {
    #[default]
    Available,
    Busy {
        return_time: f64,
    },
    Consumed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Worker {
    pub id: WorkerId,
    /// Performance rate in (0, 1].
    pub rate: f64,
    #[serde(default)]
    pub state: WorkerState,
    /// Return rate after an assignment; `None` means the worker never returns.
    #[serde(default)]
    pub cycle_rate: Option<f64>,
}

impl Worker {
    pub fn new(id: usize, rate: f64) -> Self {
        Worker {
            id: WorkerId(id),
            rate,
            state: WorkerState::Available,
            cycle_rate: None,
        }
    }

    pub fn cycling(id: usize, rate: f64, cycle_rate: f64) -> Self {
        Worker {
            cycle_rate: Some(cycle_rate),
            ..Worker::new(id, rate)
        }
    }

    pub fn is_available(&self) -> bool {
        matches!(self.state, WorkerState::Available)
    }

    fn validate(&self) -> Result<()> {
        if !(self.rate > 0.0 && self.rate <= 1.0) {
            return Err(Error::InvalidInstance(format!(
                "worker {} has rate {} outside (0, 1]",
                self.id, self.rate
            )));
        }
        if let Some(lambda) = self.cycle_rate {
            if !(lambda > 0.0 && lambda.is_finite()) {
                return Err(Error::InvalidInstance(format!(
                    "worker {} has cycle rate {lambda}; use no cycle rate for workers that never return",
                    self.id
                )));
            }
        }
        if let WorkerState::Busy { return_time } = self.state {
            if self.cycle_rate.is_none() || !return_time.is_finite() {
                return Err(Error::InvalidInstance(format!(
                    "worker {} is busy without a finite return",
                    self.id
                )));
            }
        }
        Ok(())
    }
}

/// Workers given by rates, numbered from 1 in the order supplied.
pub fn workers_from_rates(rates: &[f64]) -> Vec<Worker> {
    rates
        .iter()
        .enumerate()
        .map(|(k, &rate)| Worker::new(k + 1, rate))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Outcome {
    Assigned { worker: WorkerId, f_value: f64 },
    Rejected,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AssignmentRecord {
    pub job: JobId,
    pub value: f64,
    pub outcome: Outcome,
    pub threshold: f64,
}

impl AssignmentRecord {
    pub fn worker(&self) -> Option<WorkerId> {
        match self.outcome {
            Outcome::Assigned { worker, .. } => Some(worker),
            Outcome::Rejected => None,
        }
    }

    pub fn is_assigned(&self) -> bool {
        self.worker().is_some()
    }
}

/// Indicator-sum reward of a fixed assignment: the number of assigned jobs.
///
/// Each worker may serve at most one job; a repeated worker is an error.
pub fn compute_reward(records: &[AssignmentRecord]) -> Result<u64> {
    let mut seen = BTreeSet::new();
    let mut reward = 0;
    for worker in records.iter().filter_map(AssignmentRecord::worker) {
        if !seen.insert(worker) {
            return Err(Error::DuplicateWorker(worker));
        }
        reward += 1;
    }
    Ok(reward)
}

/// A threshold, a function and a worker pool.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub alpha: f64,
    pub function: ThresholdFunction,
    pub workers: Vec<Worker>,
    #[serde(default)]
    pub rng_seed: u64,
}

impl Instance {
    pub fn new(alpha: f64, function: ThresholdFunction, workers: Vec<Worker>) -> Result<Self> {
        let instance = Instance {
            alpha,
            function,
            workers,
            rng_seed: 0,
        };
        instance.validate()?;
        Ok(instance)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.rng_seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !self.alpha.is_finite() {
            return Err(Error::InvalidInstance(format!(
                "threshold {} is not finite",
                self.alpha
            )));
        }
        self.function.validate()?;
        let mut ids = BTreeSet::new();
        for worker in &self.workers {
            worker.validate()?;
            if !ids.insert(worker.id) {
                return Err(Error::InvalidInstance(format!(
                    "worker id {} appears twice",
                    worker.id
                )));
            }
        }
        Ok(())
    }

    pub fn rates(&self) -> Vec<f64> {
        self.workers.iter().map(|w| w.rate).collect()
    }

    /// True when no worker ever returns to the pool.
    pub fn single_use(&self) -> bool {
        self.workers.iter().all(|w| w.cycle_rate.is_none())
    }
}
