//! Online greedy threshold assignment.
//!
//! Each arriving job goes to the available worker with the smallest
//! `f(x, p)` that still meets the threshold; if there is none the job is
//! rejected. For order-preserving `f` and single-use workers this maximises
//! the number of assigned jobs for every arrival sequence, whatever the job
//! distribution or the number of jobs.
//!
//! Workers with a finite cycle rate `λ` return to the pool after a delay
//! (`1/λ` by default, or exponential with mean `1/λ`).

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::function::{OrderTracker, OrderWitness, RateTrend};
use crate::model::{
    compute_reward, AssignmentRecord, Instance, Job, Outcome, Worker, WorkerId, WorkerState,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReturnDelay {
    /// Return exactly `1/λ` after the assignment.
    #[default]
    Deterministic,
    /// Exponential delay with mean `1/λ`, drawn from the instance seed.
    Exponential,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PolicyOptions {
    /// Keep assigning when `f` is found not to be order-preserving. The
    /// output is then a heuristic, not an optimum.
    #[serde(default)]
    pub force_non_order_preserving: bool,
    #[serde(default)]
    pub return_delay: ReturnDelay,
}

impl PolicyOptions {
    pub fn forced() -> Self {
        PolicyOptions {
            force_non_order_preserving: true,
            ..Self::default()
        }
    }
}

/// A job value with its arrival time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Arrival {
    pub value: f64,
    #[serde(default)]
    pub time: f64,
}

impl From<(f64, f64)> for Arrival {
    fn from((value, time): (f64, f64)) -> Self {
        Arrival { value, time }
    }
}

/// Jobs that all arrive at time zero.
pub fn simultaneous(values: &[f64]) -> Vec<Arrival> {
    values
        .iter()
        .map(|&value| Arrival { value, time: 0.0 })
        .collect()
}

#[derive(Debug, Clone)]
pub struct PolicyState {
    instance: Instance,
    options: PolicyOptions,
    clock: f64,
    log: Vec<AssignmentRecord>,
    next_job: usize,
    /// Positions of available workers, sorted by `(rate, id)`.
    available: Vec<usize>,
    tracker: OrderTracker,
    /// Violation found on the domain grid, not yet surfaced.
    pending: Option<OrderWitness>,
    /// First violation accepted under the force flag.
    violation: Option<OrderWitness>,
    rng: ChaCha8Rng,
}

impl PolicyState {
    pub fn new(instance: Instance, options: PolicyOptions) -> Result<Self> {
        instance.validate()?;
        let mut tracker = OrderTracker::new(&instance.function, &instance.workers);
        let pending = tracker.observe_grid(&instance.function, &instance.workers)?;
        let rng = ChaCha8Rng::seed_from_u64(instance.rng_seed);
        let mut state = PolicyState {
            instance,
            options,
            clock: 0.0,
            log: Vec::new(),
            next_job: 1,
            available: Vec::new(),
            tracker,
            pending,
            violation: None,
            rng,
        };
        state.available = (0..state.instance.workers.len())
            .filter(|&k| state.instance.workers[k].is_available())
            .collect();
        let workers = &state.instance.workers;
        state
            .available
            .sort_by(|&a, &b| rate_then_id(&workers[a], &workers[b]));
        Ok(state)
    }

    pub fn instance(&self) -> &Instance {
        &self.instance
    }

    pub fn workers(&self) -> &[Worker] {
        &self.instance.workers
    }

    pub fn clock(&self) -> f64 {
        self.clock
    }

    pub fn log(&self) -> &[AssignmentRecord] {
        &self.log
    }

    pub fn into_log(self) -> Vec<AssignmentRecord> {
        self.log
    }

    /// The violation accepted under the force flag, if any. Its presence
    /// marks the run as heuristic.
    pub fn violation(&self) -> Option<&OrderWitness> {
        self.violation.as_ref()
    }

    pub fn is_heuristic(&self) -> bool {
        self.violation.is_some()
    }

    pub fn available_ids(&self) -> Vec<WorkerId> {
        let mut ids: Vec<_> = self
            .available
            .iter()
            .map(|&k| self.instance.workers[k].id)
            .collect();
        ids.sort();
        ids
    }

    /// Offers the next job in sequence, numbering it after the previous one.
    pub fn assign_next(&mut self, x: f64, arrival_time: f64) -> Result<AssignmentRecord> {
        self.offer(Job::new(self.next_job, x), arrival_time)
    }

    /// Offers a job with an explicit id (used when jobs are shared across
    /// several pools).
    pub fn offer(&mut self, job: Job, arrival_time: f64) -> Result<AssignmentRecord> {
        if !(arrival_time >= self.clock) {
            return Err(Error::TimeReversal {
                arrival: arrival_time,
                clock: self.clock,
            });
        }
        let f = &self.instance.function;
        f.domain.check(job.value)?;

        let force = self.options.force_non_order_preserving;
        if let Some(witness) = self.pending {
            if !force {
                return Err(Error::OrderViolation(Box::new(witness)));
            }
            self.violation.get_or_insert(witness);
            self.pending = None;
        }
        if let Some(witness) = self.tracker.observe(f, &job, &self.instance.workers)? {
            if !force {
                return Err(Error::OrderViolation(Box::new(witness)));
            }
            self.tracker.force(f, &job, &self.instance.workers)?;
            self.violation.get_or_insert(witness);
        }

        self.release_returning_workers(arrival_time);
        let chosen = self.select(&job)?;
        let outcome = match chosen {
            Some((slot, f_value)) => {
                let position = self.available.remove(slot);
                let return_time = self.return_time(position, arrival_time);
                let worker = &mut self.instance.workers[position];
                worker.state = match return_time {
                    Some(return_time) => WorkerState::Busy { return_time },
                    None => WorkerState::Consumed,
                };
                Outcome::Assigned {
                    worker: worker.id,
                    f_value,
                }
            }
            None => Outcome::Rejected,
        };
        let record = AssignmentRecord {
            job: job.id,
            value: job.value,
            outcome,
            threshold: self.instance.alpha,
        };
        self.log.push(record);
        self.clock = arrival_time;
        self.next_job = self.next_job.max(job.id.0 + 1);
        Ok(record)
    }

    /// Returns every busy worker whose return time has passed to the pool.
    /// Released ids come back in ascending order.
    pub fn release_returning_workers(&mut self, now: f64) -> Vec<WorkerId> {
        let mut released = Vec::new();
        for (position, worker) in self.instance.workers.iter_mut().enumerate() {
            if let WorkerState::Busy { return_time } = worker.state {
                if return_time <= now {
                    worker.state = WorkerState::Available;
                    released.push(position);
                }
            }
        }
        let workers = &self.instance.workers;
        for &position in &released {
            let slot = self
                .available
                .partition_point(|&k| rate_then_id(&workers[k], &workers[position]).is_lt());
            self.available.insert(slot, position);
        }
        let mut ids: Vec<WorkerId> = released.iter().map(|&k| workers[k].id).collect();
        ids.sort();
        ids
    }

    fn return_time(&mut self, position: usize, now: f64) -> Option<f64> {
        let lambda = self.instance.workers[position].cycle_rate?;
        let delay = match self.options.return_delay {
            ReturnDelay::Deterministic => 1.0 / lambda,
            ReturnDelay::Exponential => Exp::new(lambda)
                .expect("cycle rates are validated positive")
                .sample(&mut self.rng),
        };
        Some(now + delay)
    }

    /// Slot in `available` of the worker minimising `f(x, p)` subject to
    /// `f(x, p) >= α`; ties go to the smaller rate, then the smaller id.
    fn select(&self, job: &Job) -> Result<Option<(usize, f64)>> {
        let f = &self.instance.function;
        let alpha = self.instance.alpha;
        let workers = &self.instance.workers;
        let value = |slot: usize| f.eval(job, &workers[self.available[slot]]);
        let n = self.available.len();

        match f.rate_trend(job.value) {
            // `f` is nondecreasing along the (rate, id) order.
            Some(RateTrend::Increasing) => {
                let mut lo = 0;
                let mut hi = n;
                while lo < hi {
                    let mid = (lo + hi) / 2;
                    if value(mid)? < alpha {
                        lo = mid + 1;
                    } else {
                        hi = mid;
                    }
                }
                if lo < n {
                    Ok(Some((lo, value(lo)?)))
                } else {
                    Ok(None)
                }
            }
            // Nonincreasing: the feasible workers form a prefix and the
            // minimum sits at its end.
            Some(RateTrend::Decreasing) => {
                let mut lo = 0;
                let mut hi = n;
                while lo < hi {
                    let mid = (lo + hi) / 2;
                    if value(mid)? >= alpha {
                        lo = mid + 1;
                    } else {
                        hi = mid;
                    }
                }
                if lo == 0 {
                    return Ok(None);
                }
                let best = value(lo - 1)?;
                let mut slot = lo - 1;
                while slot > 0 && value(slot - 1)? == best {
                    slot -= 1;
                }
                Ok(Some((slot, best)))
            }
            Some(RateTrend::Flat) => {
                if n == 0 {
                    return Ok(None);
                }
                let v = value(0)?;
                Ok((v >= alpha).then_some((0, v)))
            }
            None => {
                let mut best: Option<(usize, f64)> = None;
                for slot in 0..n {
                    let v = value(slot)?;
                    if v < alpha {
                        continue;
                    }
                    let better = match best {
                        None => true,
                        Some((b, bv)) => v
                            .total_cmp(&bv)
                            .then_with(|| {
                                rate_then_id(
                                    &workers[self.available[slot]],
                                    &workers[self.available[b]],
                                )
                            })
                            .is_lt(),
                    };
                    if better {
                        best = Some((slot, v));
                    }
                }
                Ok(best)
            }
        }
    }
}

fn rate_then_id(a: &Worker, b: &Worker) -> std::cmp::Ordering {
    a.rate.total_cmp(&b.rate).then(a.id.cmp(&b.id))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamOutcome {
    pub records: Vec<AssignmentRecord>,
    pub reward: u64,
    /// Set when the run went ahead on a non-order-preserving function.
    pub heuristic: Option<OrderWitness>,
}

/// Runs the greedy policy over a whole arrival stream.
///
/// The number of jobs need not match the number of workers. With cycling
/// workers the reward counts every assignment, including repeat uses.
pub fn run_stream(
    instance: &Instance,
    jobs: &[Arrival],
    options: PolicyOptions,
) -> Result<StreamOutcome> {
    let mut state = PolicyState::new(instance.clone(), options)?;
    for arrival in jobs {
        state.assign_next(arrival.value, arrival.time)?;
    }
    let heuristic = state.violation().copied();
    let records = state.into_log();
    let reward = if instance.single_use() {
        compute_reward(&records)?
    } else {
        records.iter().filter(|r| r.is_assigned()).count() as u64
    };
    Ok(StreamOutcome {
        records,
        reward,
        heuristic,
    })
}
