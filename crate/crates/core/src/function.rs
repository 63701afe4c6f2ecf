//! Threshold functions `f(x, p)` and order-preservation checks.
//!
//! A threshold function scores a job value `x` against a worker rate `p`. The
//! greedy policy is only optimal when the ranking of workers by `f(x, ·)` never
//! strictly reverses from one job value to another; [`check_order_preserving`]
//! decides that on a finite probe set and produces a witness when it fails.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Job, JobId, Worker, WorkerId};

/// Number of uniformly spaced probes laid over a continuous domain.
pub const GRID_PROBES: usize = 64;

/// Closed interval of admissible job values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    pub lo: f64,
    pub hi: f64,
}

impl Domain {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        let domain = Domain { lo, hi };
        domain.validate()?;
        Ok(domain)
    }

    pub fn unit() -> Self {
        Domain { lo: 0.0, hi: 1.0 }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn check(&self, x: f64) -> Result<()> {
        if self.contains(x) {
            Ok(())
        } else {
            Err(Error::Domain {
                x,
                lo: self.lo,
                hi: self.hi,
            })
        }
    }

    fn validate(&self) -> Result<()> {
        if self.lo.is_finite() && self.hi.is_finite() && self.lo <= self.hi {
            Ok(())
        } else {
            Err(Error::InvalidInstance(format!(
                "domain [{}, {}] is not a finite ordered interval",
                self.lo, self.hi
            )))
        }
    }

    /// `GRID_PROBES` evenly spaced points including both endpoints.
    pub fn grid(&self) -> Vec<f64> {
        let step = self.width() / (GRID_PROBES - 1) as f64;
        (0..GRID_PROBES)
            .map(|k| {
                if k == GRID_PROBES - 1 {
                    self.hi
                } else {
                    self.lo + step * k as f64
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Monotonicity {
    Increasing,
    Decreasing,
    Unknown,
}

/// How `f(x, ·)` moves with the worker rate at a fixed job value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RateTrend {
    Increasing,
    Flat,
    Decreasing,
}

/// Explicit `(job, worker) -> value` table.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "Vec<TableEntry>", into = "Vec<TableEntry>")]
pub struct Table(BTreeMap<(JobId, WorkerId), f64>);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TableEntry {
    pub job: JobId,
    pub worker: WorkerId,
    pub value: f64,
}

impl From<Vec<TableEntry>> for Table {
    fn from(entries: Vec<TableEntry>) -> Self {
        Table(
            entries
                .into_iter()
                .map(|e| ((e.job, e.worker), e.value))
                .collect(),
        )
    }
}

impl From<Table> for Vec<TableEntry> {
    fn from(table: Table) -> Self {
        table
            .0
            .into_iter()
            .map(|((job, worker), value)| TableEntry { job, worker, value })
            .collect()
    }
}

impl Table {
    /// Builds a table from rows indexed by job, columns by worker, both from 1.
    pub fn from_rows(rows: &[&[f64]]) -> Self {
        let mut map = BTreeMap::new();
        for (i, row) in rows.iter().enumerate() {
            for (j, &value) in row.iter().enumerate() {
                map.insert((JobId(i + 1), WorkerId(j + 1)), value);
            }
        }
        Table(map)
    }

    pub fn insert(&mut self, job: JobId, worker: WorkerId, value: f64) {
        self.0.insert((job, worker), value);
    }

    pub fn get(&self, job: JobId, worker: WorkerId) -> Option<f64> {
        self.0.get(&(job, worker)).copied()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FunctionKind {
    /// `f(x, p) = x * p`
    Product,
    /// `f(x, p) = p / x`, requires a strictly positive domain.
    Ratio,
    Tabulated {
        table: Table,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdFunction {
    #[serde(flatten)]
    pub kind: FunctionKind,
    pub domain: Domain,
}

impl ThresholdFunction {
    pub fn product(domain: Domain) -> Self {
        ThresholdFunction {
            kind: FunctionKind::Product,
            domain,
        }
    }

    pub fn ratio(domain: Domain) -> Result<Self> {
        let f = ThresholdFunction {
            kind: FunctionKind::Ratio,
            domain,
        };
        f.validate()?;
        Ok(f)
    }

    pub fn tabulated(table: Table, domain: Domain) -> Self {
        ThresholdFunction {
            kind: FunctionKind::Tabulated { table },
            domain,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.domain.validate()?;
        if matches!(self.kind, FunctionKind::Ratio) && self.domain.lo <= 0.0 {
            return Err(Error::InvalidInstance(format!(
                "ratio function needs a positive domain, got lower bound {}",
                self.domain.lo
            )));
        }
        Ok(())
    }

    pub fn is_analytic(&self) -> bool {
        !matches!(self.kind, FunctionKind::Tabulated { .. })
    }

    pub fn monotonicity(&self) -> Monotonicity {
        match self.kind {
            FunctionKind::Product => Monotonicity::Increasing,
            FunctionKind::Ratio => Monotonicity::Decreasing,
            FunctionKind::Tabulated { .. } => Monotonicity::Unknown,
        }
    }

    /// Evaluates `f` for a concrete job and worker.
    pub fn eval(&self, job: &Job, worker: &Worker) -> Result<f64> {
        match &self.kind {
            FunctionKind::Tabulated { table } => {
                self.domain.check(job.value)?;
                table.get(job.id, worker.id).ok_or(Error::MissingEntry {
                    job: job.id,
                    worker: worker.id,
                })
            }
            _ => self.eval_at(job.value, worker.rate),
        }
    }

    /// Evaluates an analytic function at a raw `(x, p)` pair.
    pub fn eval_at(&self, x: f64, p: f64) -> Result<f64> {
        self.domain.check(x)?;
        match self.kind {
            FunctionKind::Product => Ok(x * p),
            FunctionKind::Ratio => {
                if x <= 0.0 {
                    Err(Error::RatioAtNonPositive { x })
                } else {
                    Ok(p / x)
                }
            }
            FunctionKind::Tabulated { .. } => Err(Error::InvalidInstance(
                "a tabulated function is indexed by job and worker ids, not raw values".into(),
            )),
        }
    }

    /// Direction of `f(x, ·)` in the rate for positive rates, when known analytically.
    pub fn rate_trend(&self, x: f64) -> Option<RateTrend> {
        match self.kind {
            FunctionKind::Product => Some(match x.partial_cmp(&0.0)? {
                Ordering::Greater => RateTrend::Increasing,
                Ordering::Equal => RateTrend::Flat,
                Ordering::Less => RateTrend::Decreasing,
            }),
            FunctionKind::Ratio => Some(RateTrend::Increasing),
            FunctionKind::Tabulated { .. } => None,
        }
    }

    /// Probe jobs for order checks: the observed jobs plus, for analytic
    /// functions, a uniform grid over the domain tagged with job id 0.
    pub fn probe_set(&self, observed: &[Job]) -> Vec<Job> {
        let mut probes = observed.to_vec();
        if self.is_analytic() {
            probes.extend(self.domain.grid().into_iter().map(|x| Job::new(0, x)));
        }
        probes
    }
}

/// Two probes and two workers whose relative order flips between the probes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrderWitness {
    pub first_job: Job,
    pub second_job: Job,
    pub worker_u: WorkerId,
    pub rate_u: f64,
    pub worker_v: WorkerId,
    pub rate_v: f64,
    /// `f(first_job, u), f(first_job, v)`
    pub first_values: (f64, f64),
    /// `f(second_job, u), f(second_job, v)`
    pub second_values: (f64, f64),
}

impl fmt::Display for OrderWitness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "at {} (x = {}) f({}) = {} vs f({}) = {}, at {} (x = {}) f({}) = {} vs f({}) = {}",
            self.first_job.id,
            self.first_job.value,
            self.worker_u,
            self.first_values.0,
            self.worker_v,
            self.first_values.1,
            self.second_job.id,
            self.second_job.value,
            self.worker_u,
            self.second_values.0,
            self.worker_v,
            self.second_values.1,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum OrderVerdict {
    Preserving,
    Violation(OrderWitness),
}

impl OrderVerdict {
    pub fn is_preserving(&self) -> bool {
        matches!(self, OrderVerdict::Preserving)
    }
}

/// Decides whether the worker ranking under `f(x, ·)` is free of strict
/// reversals across all probe jobs. Ties never count as violations.
pub fn check_order_preserving(
    f: &ThresholdFunction,
    probes: &[Job],
    workers: &[Worker],
) -> Result<OrderVerdict> {
    if probes.is_empty() || workers.is_empty() {
        return Err(Error::InvalidInstance(
            "order check needs at least one probe and one worker".into(),
        ));
    }
    let mut tracker = RankRefinement::new(workers.len());
    for probe in probes {
        if let Some(witness) = tracker.observe(f, probe, workers)? {
            return Ok(OrderVerdict::Violation(witness));
        }
    }
    Ok(OrderVerdict::Preserving)
}

/// Common refinement of the weak orders seen so far.
///
/// A new probe conflicts with some earlier probe iff it strictly reverses a
/// strict relation of the refinement, so one rank vector stands in for all
/// earlier probes. The probe rows are kept to extract a witness.
#[derive(Debug, Clone)]
pub(crate) struct RankRefinement {
    rank: Vec<usize>,
    rows: Vec<(Job, Vec<f64>)>,
}

impl RankRefinement {
    fn new(workers: usize) -> Self {
        RankRefinement {
            rank: vec![0; workers],
            rows: Vec::new(),
        }
    }

    /// Records `probe`, or returns a witness without recording it.
    fn observe(
        &mut self,
        f: &ThresholdFunction,
        probe: &Job,
        workers: &[Worker],
    ) -> Result<Option<OrderWitness>> {
        let row = workers
            .iter()
            .map(|w| f.eval(probe, w))
            .collect::<Result<Vec<_>>>()?;
        if let Some(bad) = row.iter().find(|v| v.is_nan()) {
            return Err(Error::InvalidInstance(format!(
                "threshold function returned {bad} at {}",
                probe.id
            )));
        }

        let mut order: Vec<usize> = (0..workers.len()).collect();
        order.sort_by(|&a, &b| {
            self.rank[a]
                .cmp(&self.rank[b])
                .then(row[a].total_cmp(&row[b]))
        });

        if self.conflicts(&order, &row) {
            return Ok(Some(self.witness(probe, &row, workers)));
        }

        let mut new_rank = vec![0; workers.len()];
        let mut r = 0;
        for k in 0..order.len() {
            if k > 0 {
                let (prev, cur) = (order[k - 1], order[k]);
                if self.rank[prev] != self.rank[cur] || row[prev] != row[cur] {
                    r += 1;
                }
            }
            new_rank[order[k]] = r;
        }
        self.rank = new_rank;
        self.rows.push((*probe, row));
        Ok(None)
    }

    /// Walks rank groups upward; a value below the maximum of an earlier
    /// group is a strict reversal.
    fn conflicts(&self, order: &[usize], row: &[f64]) -> bool {
        let mut prev_max = f64::NEG_INFINITY;
        let mut group_max = f64::NEG_INFINITY;
        let mut group_rank = None;
        for &w in order {
            if group_rank != Some(self.rank[w]) {
                prev_max = prev_max.max(group_max);
                group_max = f64::NEG_INFINITY;
                group_rank = Some(self.rank[w]);
            }
            if row[w] < prev_max {
                return true;
            }
            group_max = group_max.max(row[w]);
        }
        false
    }

    /// Among all earlier probes and worker pairs that reverse against the
    /// new row, picks the one with the widest combined separation.
    fn witness(&self, probe: &Job, row: &[f64], workers: &[Worker]) -> OrderWitness {
        let mut best: Option<(f64, usize, usize, usize)> = None;
        for (a, (_, earlier)) in self.rows.iter().enumerate() {
            for u in 0..workers.len() {
                for v in u + 1..workers.len() {
                    let da = earlier[u] - earlier[v];
                    let db = row[u] - row[v];
                    if (da < 0.0 && db > 0.0) || (da > 0.0 && db < 0.0) {
                        let score = da.abs() + db.abs();
                        if best.is_none_or(|(s, ..)| score > s) {
                            best = Some((score, a, u, v));
                        }
                    }
                }
            }
        }
        let (_, a, u, v) = best.expect("a rank conflict implies a pairwise reversal");
        let (first_job, earlier) = &self.rows[a];
        OrderWitness {
            first_job: *first_job,
            second_job: *probe,
            worker_u: workers[u].id,
            rate_u: workers[u].rate,
            worker_v: workers[v].id,
            rate_v: workers[v].rate,
            first_values: (earlier[u], earlier[v]),
            second_values: (row[u], row[v]),
        }
    }
}

/// Incremental order check used by the online policy.
///
/// Analytic kinds only need the sign of the job value; tabulated functions
/// fall back to rank refinement over every observed job.
#[derive(Debug, Clone)]
pub(crate) enum OrderTracker {
    Analytic {
        /// Largest-magnitude probes seen with increasing and decreasing trend.
        increasing: Option<Job>,
        decreasing: Option<Job>,
        /// Positions of the lowest and highest rate, when they differ.
        spread: Option<(usize, usize)>,
    },
    Generic(RankRefinement),
}

impl OrderTracker {
    pub(crate) fn new(f: &ThresholdFunction, workers: &[Worker]) -> Self {
        if f.is_analytic() {
            let lowest =
                (0..workers.len()).min_by(|&a, &b| workers[a].rate.total_cmp(&workers[b].rate));
            let highest =
                (0..workers.len()).min_by(|&a, &b| workers[b].rate.total_cmp(&workers[a].rate));
            let spread = match (lowest, highest) {
                (Some(lo), Some(hi)) if workers[lo].rate < workers[hi].rate => {
                    Some((lo.min(hi), lo.max(hi)))
                }
                _ => None,
            };
            OrderTracker::Analytic {
                increasing: None,
                decreasing: None,
                spread,
            }
        } else {
            OrderTracker::Generic(RankRefinement::new(workers.len()))
        }
    }

    /// Feeds the uniform grid over the domain, returning the first witness
    /// it produces. Violating grid points are still recorded.
    pub(crate) fn observe_grid(
        &mut self,
        f: &ThresholdFunction,
        workers: &[Worker],
    ) -> Result<Option<OrderWitness>> {
        let mut first = None;
        if f.is_analytic() {
            for x in f.domain.grid() {
                let probe = Job::new(0, x);
                if let Some(witness) = self.observe(f, &probe, workers)? {
                    first.get_or_insert(witness);
                    self.force(f, &probe, workers)?;
                }
            }
        }
        Ok(first)
    }

    /// Returns a witness if `probe` breaks order preservation. Nothing is
    /// recorded on a violation; call [`OrderTracker::force`] to accept it.
    pub(crate) fn observe(
        &mut self,
        f: &ThresholdFunction,
        probe: &Job,
        workers: &[Worker],
    ) -> Result<Option<OrderWitness>> {
        match self {
            OrderTracker::Generic(refinement) => refinement.observe(f, probe, workers),
            OrderTracker::Analytic {
                increasing,
                decreasing,
                spread,
            } => {
                let trend = f.rate_trend(probe.value);
                let opposite = match trend {
                    Some(RateTrend::Increasing) => *decreasing,
                    Some(RateTrend::Decreasing) => *increasing,
                    _ => None,
                };
                match (opposite, *spread) {
                    (Some(earlier), Some((u, v))) => {
                        let pair = |job: &Job| -> Result<(f64, f64)> {
                            Ok((f.eval(job, &workers[u])?, f.eval(job, &workers[v])?))
                        };
                        Ok(Some(OrderWitness {
                            first_job: earlier,
                            second_job: *probe,
                            worker_u: workers[u].id,
                            rate_u: workers[u].rate,
                            worker_v: workers[v].id,
                            rate_v: workers[v].rate,
                            first_values: pair(&earlier)?,
                            second_values: pair(probe)?,
                        }))
                    }
                    _ => {
                        self.commit_analytic(f, probe);
                        Ok(None)
                    }
                }
            }
        }
    }

    fn commit_analytic(&mut self, f: &ThresholdFunction, probe: &Job) {
        if let OrderTracker::Analytic {
            increasing,
            decreasing,
            ..
        } = self
        {
            let slot = match f.rate_trend(probe.value) {
                Some(RateTrend::Increasing) => increasing,
                Some(RateTrend::Decreasing) => decreasing,
                _ => return,
            };
            if slot.is_none_or(|s| probe.value.abs() > s.value.abs()) {
                *slot = Some(*probe);
            }
        }
    }

    /// Accepts a probe that produced a witness (heuristic mode).
    pub(crate) fn force(
        &mut self,
        f: &ThresholdFunction,
        probe: &Job,
        workers: &[Worker],
    ) -> Result<()> {
        match self {
            OrderTracker::Analytic { .. } => self.commit_analytic(f, probe),
            OrderTracker::Generic(refinement) => {
                let row = workers
                    .iter()
                    .map(|w| f.eval(probe, w))
                    .collect::<Result<Vec<_>>>()?;
                refinement.rows.push((*probe, row));
            }
        }
        Ok(())
    }
}
