//! Prioritised levels of workers.
//!
//! A job is offered to level 1 first and falls through to the next level
//! only when the current one rejects it; a job rejected by the last level is
//! lost. Each level runs the greedy policy over its own workers with its own
//! threshold and function.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::function::ThresholdFunction;
use crate::model::{AssignmentRecord, Instance, Job, Worker};
use crate::policy::{run_stream, Arrival, PolicyOptions, PolicyState};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelSpec {
    pub workers: Vec<Worker>,
    pub alpha: f64,
    pub function: ThresholdFunction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultilevelOutcome {
    /// Records per level; level `i + 1` only holds jobs rejected by level `i`.
    pub records: Vec<Vec<AssignmentRecord>>,
    pub rewards: Vec<u64>,
    pub total: u64,
    pub heuristic: bool,
}

fn validate_levels(levels: &[LevelSpec]) -> Result<()> {
    if levels.is_empty() {
        return Err(Error::InvalidInstance(
            "at least one level is needed".into(),
        ));
    }
    let mut seen = BTreeSet::new();
    for (i, level) in levels.iter().enumerate() {
        for worker in &level.workers {
            if !seen.insert(worker.id) {
                return Err(Error::InvalidInstance(format!(
                    "worker {} appears in more than one level (again in level {})",
                    worker.id,
                    i + 1
                )));
            }
        }
    }
    Ok(())
}

fn level_instance(level: &LevelSpec, index: usize, seed: u64) -> Result<Instance> {
    Ok(
        Instance::new(level.alpha, level.function.clone(), level.workers.clone())?
            .with_seed(crate::rng::derive_seed(seed, index as u64, 0)),
    )
}

/// Cascades every job through the levels in priority order. All levels share
/// one clock: a level sees the arrival time of every job offered to it.
pub fn run_multilevel(
    levels: &[LevelSpec],
    jobs: &[Arrival],
    options: PolicyOptions,
    seed: u64,
) -> Result<MultilevelOutcome> {
    validate_levels(levels)?;
    let mut states = levels
        .iter()
        .enumerate()
        .map(|(i, level)| PolicyState::new(level_instance(level, i, seed)?, options))
        .collect::<Result<Vec<_>>>()?;

    for (k, arrival) in jobs.iter().enumerate() {
        let job = Job::new(k + 1, arrival.value);
        for state in states.iter_mut() {
            if state.offer(job, arrival.time)?.is_assigned() {
                break;
            }
        }
    }

    let heuristic = states.iter().any(PolicyState::is_heuristic);
    let records: Vec<Vec<AssignmentRecord>> =
        states.into_iter().map(PolicyState::into_log).collect();
    let rewards: Vec<u64> = records
        .iter()
        .map(|log| log.iter().filter(|r| r.is_assigned()).count() as u64)
        .collect();
    Ok(MultilevelOutcome {
        total: rewards.iter().sum(),
        records,
        rewards,
        heuristic,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlatComparison {
    pub leveled: u64,
    pub flat: u64,
    /// `flat - leveled`, never negative for comparable levels.
    pub gap: i64,
}

/// Rewards of the leveled pipeline and of one pool holding every worker,
/// on the same jobs. Needs one function and one threshold across levels.
pub fn compare_flat(
    levels: &[LevelSpec],
    jobs: &[Arrival],
    options: PolicyOptions,
    seed: u64,
) -> Result<FlatComparison> {
    validate_levels(levels)?;
    let head = &levels[0];
    for (i, level) in levels.iter().enumerate().skip(1) {
        if level.function != head.function {
            return Err(Error::IncomparableLevels(format!(
                "level {} uses a different threshold function than level 1",
                i + 1
            )));
        }
        if level.alpha != head.alpha {
            return Err(Error::IncomparableLevels(format!(
                "level {} has threshold {} but level 1 has {}",
                i + 1,
                level.alpha,
                head.alpha
            )));
        }
    }
    let leveled = run_multilevel(levels, jobs, options, seed)?.total;
    let pool: Vec<Worker> = levels.iter().flat_map(|l| l.workers.clone()).collect();
    let flat_instance = Instance::new(head.alpha, head.function.clone(), pool)?.with_seed(seed);
    let flat = run_stream(&flat_instance, jobs, options)?.reward;
    Ok(FlatComparison {
        leveled,
        flat,
        gap: flat as i64 - leveled as i64,
    })
}

/// Splits workers into levels by fractions of the pool, lowest `f` first.
///
/// Workers are ranked by `f(probe, p)` (rate, then id, on ties); each level
/// gets `floor(fraction * n)` workers and the remainder goes to level 1.
pub fn split_by_fractions(
    workers: &[Worker],
    function: &ThresholdFunction,
    probe: f64,
    fractions: &[f64],
) -> Result<Vec<Vec<Worker>>> {
    if fractions.is_empty() || fractions.iter().any(|&q| !(0.0..=1.0).contains(&q)) {
        return Err(Error::InvalidInstance(
            "level fractions must lie in [0, 1]".into(),
        ));
    }
    let total: f64 = fractions.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidInstance(format!(
            "level fractions sum to {total}, not 1"
        )));
    }
    let mut keyed = Vec::with_capacity(workers.len());
    for w in workers {
        keyed.push((function.eval(&Job::new(0, probe), w)?, w.clone()));
    }
    keyed.sort_by(|(fa, a), (fb, b)| {
        fa.total_cmp(fb)
            .then(a.rate.total_cmp(&b.rate))
            .then(a.id.cmp(&b.id))
    });

    let n = workers.len();
    let mut sizes: Vec<usize> = fractions
        .iter()
        .map(|q| (q * n as f64 + 1e-9).floor() as usize)
        .collect();
    let assigned: usize = sizes.iter().sum();
    sizes[0] += n.saturating_sub(assigned);

    let mut ordered = keyed.into_iter().map(|(_, w)| w);
    Ok(sizes
        .into_iter()
        .map(|size| ordered.by_ref().take(size).collect())
        .collect())
}
