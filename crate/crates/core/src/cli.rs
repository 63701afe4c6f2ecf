//! JSON-configured runs: parse a config, dispatch to the library, and emit
//! a report plus CSV tables.
//!
//! Output is a pure function of the resolved config. Every report embeds
//! that config, seed included, and every random draw comes from a stream
//! keyed by the seed, so reruns are byte-identical.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::analysis::{self, Side};
use crate::dsstap::{self, DistributionSpec, MonteCarlo};
use crate::error::{Error, Result};
use crate::function::{check_order_preserving, Domain, Table, ThresholdFunction};
use crate::model::{AssignmentRecord, Instance, Job, Outcome, Worker};
use crate::multilevel::{self, LevelSpec};
use crate::oracle;
use crate::policy::{self, Arrival, PolicyOptions, ReturnDelay};
use crate::rng;

pub const CONFIG_SCHEMA: &str = "sstap.config.v1";
pub const REPORT_SCHEMA: &str = "sstap.report.v1";

// Stream tags for the seed splitter.
const JOB_STREAM: u64 = 0x6a6f_6273;
const MIXTURE_STREAM: u64 = 0x6d69_7874;
const ORDER_STREAM: u64 = 0x6f72_6472;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Simulate,
    AnalyzeLoad,
    Multilevel,
    Dsstap,
    CheckOrder,
    Figure1,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Simulate => "simulate",
            Mode::AnalyzeLoad => "analyze-load",
            Mode::Multilevel => "multilevel",
            Mode::Dsstap => "dsstap",
            Mode::CheckOrder => "check-order",
            Mode::Figure1 => "figure1",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FunctionName {
    #[default]
    Product,
    Ratio,
    Tabulated,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionConfig {
    pub kind: FunctionName,
    /// `[lo, hi]`, the unit interval when absent.
    #[serde(default)]
    pub domain: Option<[f64; 2]>,
    /// Rows by job, columns by worker, both numbered from 1.
    #[serde(default)]
    pub table: Option<Vec<Vec<f64>>>,
}

impl FunctionConfig {
    fn resolve(&self, field: &str) -> Result<ThresholdFunction> {
        let [lo, hi] = self.domain.unwrap_or([0.0, 1.0]);
        let domain = Domain::new(lo, hi).map_err(|e| reframe(format!("{field}.domain"), e))?;
        let f = match self.kind {
            FunctionName::Product => ThresholdFunction::product(domain),
            FunctionName::Ratio => ThresholdFunction::ratio(domain)
                .map_err(|e| reframe(format!("{field}.domain"), e))?,
            FunctionName::Tabulated => {
                let rows = self.table.as_ref().ok_or_else(|| {
                    Error::config(
                        format!("{field}.table"),
                        "required for a tabulated function",
                    )
                })?;
                let rows: Vec<&[f64]> = rows.iter().map(Vec::as_slice).collect();
                ThresholdFunction::tabulated(Table::from_rows(&rows), domain)
            }
        };
        if self.table.is_some() && f.is_analytic() {
            return Err(Error::config(
                format!("{field}.table"),
                "only a tabulated function takes a table",
            ));
        }
        Ok(f)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorkersConfig {
    #[serde(default)]
    pub rates: Option<Vec<f64>>,
    /// `n` workers with rates `i/n`, `i = 1..=n`.
    #[serde(default)]
    pub linear: Option<usize>,
    /// Per-worker cycle rate; `null` for a worker that never returns.
    #[serde(default)]
    pub cycle_rates: Option<Vec<Option<f64>>>,
}

impl WorkersConfig {
    /// Workers numbered consecutively from `first_id`.
    fn resolve(&self, field: &str, first_id: usize) -> Result<Vec<Worker>> {
        let rates: Vec<f64> = match (&self.rates, self.linear) {
            (Some(rates), None) => rates.clone(),
            (None, Some(n)) => (1..=n).map(|i| i as f64 / n as f64).collect(),
            _ => {
                return Err(Error::config(
                    field,
                    "give exactly one of `rates` or `linear`",
                ))
            }
        };
        if rates.is_empty() {
            return Err(Error::config(field, "at least one worker is required"));
        }
        let cycles = match &self.cycle_rates {
            None => vec![None; rates.len()],
            Some(c) if c.len() == rates.len() => c.clone(),
            Some(c) => {
                return Err(Error::config(
                    format!("{field}.cycle_rates"),
                    format!("{} entries for {} workers", c.len(), rates.len()),
                ))
            }
        };
        let workers: Vec<Worker> = rates
            .iter()
            .zip(cycles)
            .enumerate()
            .map(|(k, (&rate, cycle))| match cycle {
                Some(lambda) => Worker::cycling(first_id + k, rate, lambda),
                None => Worker::new(first_id + k, rate),
            })
            .collect();
        // Rate and cycle checks live on the instance; run them here to name the field.
        Instance::new(
            0.0,
            ThresholdFunction::product(Domain::unit()),
            workers.clone(),
        )
        .map_err(|e| reframe(field, e))?;
        Ok(workers)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobsConfig {
    #[serde(default)]
    pub values: Option<Vec<f64>>,
    /// Arrival times matching `values`; all zero when absent.
    #[serde(default)]
    pub times: Option<Vec<f64>>,
    #[serde(default)]
    pub distribution: Option<DistributionSpec>,
    #[serde(default)]
    pub count: Option<usize>,
    /// Gap between consecutive sampled arrivals.
    #[serde(default)]
    pub interarrival: Option<f64>,
}

impl JobsConfig {
    fn resolve(&self, domain: &Domain, seed: u64) -> Result<Vec<Arrival>> {
        let values = match (&self.values, &self.distribution) {
            (Some(values), None) => {
                if self.count.is_some() {
                    return Err(Error::config("jobs.count", "only used with `distribution`"));
                }
                values.clone()
            }
            (None, Some(dist)) => {
                dist.validate_job(domain)
                    .map_err(|e| reframe("jobs.distribution", e))?;
                let count = self
                    .count
                    .ok_or_else(|| Error::config("jobs.count", "required with `distribution`"))?;
                let mut stream = rng::stream(seed, JOB_STREAM, 0);
                (0..count).map(|_| dist.sample(&mut stream)).collect()
            }
            _ => {
                return Err(Error::config(
                    "jobs",
                    "give exactly one of `values` or `distribution`",
                ))
            }
        };
        for (k, &x) in values.iter().enumerate() {
            domain
                .check(x)
                .map_err(|e| reframe(format!("jobs.values[{k}]"), e))?;
        }
        let times: Vec<f64> = match (&self.times, self.interarrival) {
            (Some(_), Some(_)) => {
                return Err(Error::config("jobs.times", "conflicts with `interarrival`"))
            }
            (Some(times), None) => {
                if times.len() != values.len() {
                    return Err(Error::config(
                        "jobs.times",
                        format!("{} times for {} jobs", times.len(), values.len()),
                    ));
                }
                times.clone()
            }
            (None, Some(gap)) => {
                if !(gap >= 0.0 && gap.is_finite()) {
                    return Err(Error::config(
                        "jobs.interarrival",
                        "must be finite and non-negative",
                    ));
                }
                (0..values.len()).map(|k| k as f64 * gap).collect()
            }
            (None, None) => vec![0.0; values.len()],
        };
        if let Some(k) = (1..times.len()).find(|&k| !(times[k] >= times[k - 1])) {
            return Err(Error::config(
                format!("jobs.times[{k}]"),
                "arrival times must be finite and nondecreasing",
            ));
        }
        if times.first().is_some_and(|t| !t.is_finite()) {
            return Err(Error::config("jobs.times[0]", "must be finite"));
        }
        Ok(values
            .into_iter()
            .zip(times)
            .map(|(value, time)| Arrival { value, time })
            .collect())
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevelConfig {
    pub workers: WorkersConfig,
    /// Falls back to the top-level threshold.
    #[serde(default)]
    pub alpha: Option<f64>,
    /// Falls back to the top-level function.
    #[serde(default)]
    pub function: Option<FunctionConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixtureConfig {
    #[serde(default = "default_side")]
    pub side: Side,
    /// Shift off the extremes; a millionth of the domain width when absent.
    #[serde(default)]
    pub epsilon: Option<f64>,
    pub sigma: f64,
    #[serde(default = "default_mixture_trials")]
    pub trials: usize,
}

fn default_side() -> Side {
    Side::Upper
}

fn default_mixture_trials() -> usize {
    1000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DsstapConfig {
    /// One entry for i.i.d. jobs, or one per worker for job-specific values.
    pub jobs: Vec<DistributionSpec>,
    pub rates: Vec<DistributionSpec>,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_true")]
    pub closed_form: bool,
    /// With i.i.d. jobs, also simulate two random fixed assignment orders.
    #[serde(default)]
    pub order_trials: Option<usize>,
}

fn default_samples() -> usize {
    dsstap::DEFAULT_SAMPLES
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Figure1Config {
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default = "default_alpha_start")]
    pub alpha_start: f64,
    #[serde(default = "default_alpha_stop")]
    pub alpha_stop: f64,
    #[serde(default = "default_alpha_step")]
    pub alpha_step: f64,
    #[serde(default = "default_trials")]
    pub trials: usize,
    /// Lower end of the job domain; the ratio `p/x` is singular at 0.
    #[serde(default = "default_domain_lo")]
    pub domain_lo: f64,
}

fn default_n() -> usize {
    200
}
fn default_alpha_start() -> f64 {
    0.1
}
fn default_alpha_stop() -> f64 {
    5.0
}
fn default_alpha_step() -> f64 {
    0.1
}
fn default_trials() -> usize {
    500
}
fn default_domain_lo() -> f64 {
    1e-6
}

impl Default for Figure1Config {
    fn default() -> Self {
        Figure1Config {
            n: default_n(),
            alpha_start: default_alpha_start(),
            alpha_stop: default_alpha_stop(),
            alpha_step: default_alpha_step(),
            trials: default_trials(),
            domain_lo: default_domain_lo(),
        }
    }
}

impl Figure1Config {
    fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::config("figure1.n", "must be at least 1"));
        }
        if self.trials == 0 {
            return Err(Error::config("figure1.trials", "must be at least 1"));
        }
        if !(self.alpha_start.is_finite() && self.alpha_stop.is_finite()) {
            return Err(Error::config(
                "figure1.alpha_start",
                "sweep bounds must be finite",
            ));
        }
        if self.alpha_start > self.alpha_stop {
            return Err(Error::config(
                "figure1.alpha_stop",
                "must not precede `alpha_start`",
            ));
        }
        if !(self.alpha_step > 0.0 && self.alpha_step.is_finite()) {
            return Err(Error::config("figure1.alpha_step", "must be positive"));
        }
        if !(self.domain_lo > 0.0 && self.domain_lo < 1.0) {
            return Err(Error::config("figure1.domain_lo", "must lie in (0, 1)"));
        }
        Ok(())
    }

    /// Thresholds of the sweep, rounded to nine decimals so the grid is
    /// free of accumulated step error.
    pub fn thresholds(&self) -> Vec<f64> {
        let steps =
            ((self.alpha_stop - self.alpha_start) / self.alpha_step + 1e-9).floor() as usize;
        (0..=steps)
            .map(|k| ((self.alpha_start + k as f64 * self.alpha_step) * 1e9).round() / 1e9)
            .collect()
    }
}

/// A parsed run configuration. Unknown fields are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema: String,
    pub mode: Mode,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub alpha: Option<f64>,
    #[serde(default)]
    pub function: FunctionConfig,
    #[serde(default)]
    pub workers: Option<WorkersConfig>,
    #[serde(default)]
    pub jobs: Option<JobsConfig>,
    #[serde(default)]
    pub levels: Option<Vec<LevelConfig>>,
    #[serde(default)]
    pub mixture: Option<MixtureConfig>,
    #[serde(default)]
    pub dsstap: Option<DsstapConfig>,
    #[serde(default)]
    pub figure1: Option<Figure1Config>,
    #[serde(default)]
    pub return_delay: ReturnDelay,
    #[serde(default)]
    pub force_non_order_preserving: bool,
    /// Output directory when none is given on the command line. Not part
    /// of the embedded config, so the report is independent of where it lands.
    #[serde(default, skip_serializing)]
    pub output: Option<PathBuf>,
}

/// Command-line values that take precedence over the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub mode: Option<Mode>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub trials: Option<usize>,
    pub force_non_order_preserving: bool,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let config: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let field = if path == "." {
                "config".to_owned()
            } else {
                path
            };
            Error::config(field, e.into_inner().to_string())
        })?;
        if config.schema != CONFIG_SCHEMA {
            return Err(Error::config(
                "schema",
                format!("expected \"{CONFIG_SCHEMA}\", got \"{}\"", config.schema),
            ));
        }
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&fs::read_to_string(path)?)
    }

    /// Applies command-line overrides; the result is what the report embeds.
    pub fn with_overrides(mut self, overrides: &Overrides) -> Self {
        if let Some(mode) = overrides.mode {
            self.mode = mode;
        }
        if let Some(seed) = overrides.seed {
            self.seed = seed;
        }
        if let Some(out) = &overrides.out {
            self.output = Some(out.clone());
        }
        if overrides.force_non_order_preserving {
            self.force_non_order_preserving = true;
        }
        if let Some(trials) = overrides.trials {
            match self.mode {
                Mode::Figure1 => {
                    self.figure1
                        .get_or_insert_with(Figure1Config::default)
                        .trials = trials
                }
                Mode::AnalyzeLoad => {
                    if let Some(m) = self.mixture.as_mut() {
                        m.trials = trials;
                    }
                }
                Mode::Dsstap => {
                    if let Some(d) = self.dsstap.as_mut() {
                        d.order_trials = Some(trials);
                    }
                }
                _ => {}
            }
        }
        if self.mode == Mode::Figure1 && self.figure1.is_none() {
            self.figure1 = Some(Figure1Config::default());
        }
        self
    }

    fn options(&self) -> PolicyOptions {
        PolicyOptions {
            force_non_order_preserving: self.force_non_order_preserving,
            return_delay: self.return_delay,
        }
    }

    fn alpha(&self) -> Result<f64> {
        match self.alpha {
            Some(a) if a.is_finite() => Ok(a),
            Some(_) => Err(Error::config("alpha", "must be finite")),
            None => Err(Error::config(
                "alpha",
                format!("required for mode {}", self.mode.as_str()),
            )),
        }
    }

    fn function(&self) -> Result<ThresholdFunction> {
        self.function.resolve("function")
    }

    fn workers(&self) -> Result<Vec<Worker>> {
        self.workers
            .as_ref()
            .ok_or_else(|| {
                Error::config(
                    "workers",
                    format!("required for mode {}", self.mode.as_str()),
                )
            })?
            .resolve("workers", 1)
    }

    fn instance(&self) -> Result<Instance> {
        Instance::new(self.alpha()?, self.function()?, self.workers()?)
            .map(|i| i.with_seed(self.seed))
            .map_err(|e| reframe("workers", e))
    }

    fn arrivals(&self, domain: &Domain) -> Result<Vec<Arrival>> {
        self.jobs
            .as_ref()
            .ok_or_else(|| {
                Error::config("jobs", format!("required for mode {}", self.mode.as_str()))
            })?
            .resolve(domain, self.seed)
    }
}

/// Turns a validation error raised deep in the library into one that names
/// the config field it came from. Run-time failures pass through.
fn reframe(field: impl Into<String>, e: Error) -> Error {
    match e {
        Error::Domain { .. }
        | Error::RatioAtNonPositive { .. }
        | Error::InvalidInstance(_)
        | Error::BadSpec(_)
        | Error::BadEpsilon { .. } => Error::config(field, e.to_string()),
        other => other,
    }
}

/// Process exit status for an error: 2 for invalid input, 3 when a module
/// finds the problem infeasible or unsupported, 1 for I/O.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Io(_) => 1,
        Error::Infeasible { .. }
        | Error::NotMonotone
        | Error::OrderViolation(_)
        | Error::TooLarge { .. }
        | Error::Numerical { .. } => 3,
        _ => 2,
    }
}

/// Report and tables of one run, ready to write.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub report: Value,
    /// `(file name, contents)`
    pub tables: Vec<(String, String)>,
}

impl RunOutput {
    pub fn report_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(&self.report).expect("report is valid JSON");
        text.push('\n');
        text
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("report.json"), self.report_json())?;
        for (name, contents) in &self.tables {
            fs::write(dir.join(name), contents)?;
        }
        Ok(())
    }
}

/// Runs a resolved config without touching the filesystem.
pub fn execute(config: &RunConfig) -> Result<RunOutput> {
    let (result, tables) = match config.mode {
        Mode::Simulate => simulate(config)?,
        Mode::AnalyzeLoad => analyze_load(config)?,
        Mode::Multilevel => run_levels(config)?,
        Mode::Dsstap => run_dsstap(config)?,
        Mode::CheckOrder => check_order(config)?,
        Mode::Figure1 => {
            let settings = config.figure1.unwrap_or_default();
            let rows = run_figure1(&settings, config.seed)?;
            let csv = figure1_csv(&rows);
            (
                json!({
                    "rows": rows,
                    "job_domain": [settings.domain_lo, 1.0],
                    "note": "jobs are uniform on [domain_lo, 1]; the ratio p/x is singular at 0",
                }),
                vec![("figure1.csv".to_owned(), csv)],
            )
        }
    };
    Ok(RunOutput {
        report: json!({
            "schema": REPORT_SCHEMA,
            "mode": config.mode,
            "seed": config.seed,
            "config": config,
            "result": result,
        }),
        tables,
    })
}

/// Applies overrides, runs, and writes `report.json` plus any CSV tables
/// into the output directory (`sstap-out` by default).
pub fn run(config: RunConfig, overrides: &Overrides) -> Result<(PathBuf, RunOutput)> {
    let config = config.with_overrides(overrides);
    let out = config
        .output
        .clone()
        .unwrap_or_else(|| PathBuf::from("sstap-out"));
    let output = execute(&config)?;
    output.write(&out)?;
    Ok((out, output))
}

type ModeOutput = (Value, Vec<(String, String)>);

fn simulate(config: &RunConfig) -> Result<ModeOutput> {
    let instance = config.instance()?;
    let arrivals = config.arrivals(&instance.function.domain)?;
    let outcome = policy::run_stream(&instance, &arrivals, config.options())?;
    // The matching bound is only meaningful when each worker serves once.
    let offline = if instance.single_use() {
        let jobs: Vec<Job> = arrivals
            .iter()
            .enumerate()
            .map(|(k, a)| Job::new(k + 1, a.value))
            .collect();
        Some(oracle::offline_optimum(
            &jobs,
            &instance.workers,
            &instance.function,
            instance.alpha,
        )?)
    } else {
        None
    };
    let csv = records_csv(&outcome.records);
    Ok((
        json!({
            "reward": outcome.reward,
            "offline_optimum": offline,
            "heuristic": outcome.heuristic,
            "records": outcome.records,
        }),
        vec![("records.csv".to_owned(), csv)],
    ))
}

fn analyze_load(config: &RunConfig) -> Result<ModeOutput> {
    let instance = config.instance()?;
    let extremes = analysis::extremes_of(&instance)?;
    let load = match &config.jobs {
        Some(_) => {
            let arrivals = config.arrivals(&instance.function.domain)?;
            let values: Vec<f64> = arrivals.iter().map(|a| a.value).collect();
            Some(analysis::verify_load_bounds(&instance, &values).map_err(|e| reframe("jobs", e))?)
        }
        None => None,
    };
    let mixture = match &config.mixture {
        Some(m) => {
            let domain = instance.function.domain;
            let epsilon = m
                .epsilon
                .unwrap_or_else(|| analysis::default_epsilon(&domain));
            let points: Vec<f64> = extremes
                .iter()
                .map(|e| match m.side {
                    Side::Upper => e.u,
                    Side::Lower => e.v,
                })
                .collect();
            let spec = analysis::build_reward_maximizing_mixture(
                &points, m.side, epsilon, m.sigma, domain,
            )
            .map_err(|e| reframe("mixture", e))?;
            let rate = analysis::full_service_rate(
                &instance,
                &spec,
                m.trials,
                rng::derive_seed(config.seed, MIXTURE_STREAM, 0),
            )?;
            Some(json!({ "spec": spec, "epsilon": epsilon, "full_service_rate": rate }))
        }
        None => None,
    };
    Ok((
        json!({ "extremes": extremes, "load": load, "mixture": mixture }),
        Vec::new(),
    ))
}

fn run_levels(config: &RunConfig) -> Result<ModeOutput> {
    let levels_cfg = config
        .levels
        .as_ref()
        .filter(|l| !l.is_empty())
        .ok_or_else(|| Error::config("levels", "at least one level is required"))?;
    let mut levels = Vec::with_capacity(levels_cfg.len());
    let mut next_id = 1;
    for (i, level) in levels_cfg.iter().enumerate() {
        let field = format!("levels[{i}]");
        let workers = level
            .workers
            .resolve(&format!("{field}.workers"), next_id)?;
        next_id += workers.len();
        let alpha = match level.alpha {
            Some(a) => a,
            None => config.alpha()?,
        };
        let function = match &level.function {
            Some(f) => f.resolve(&format!("{field}.function"))?,
            None => config.function()?,
        };
        levels.push(LevelSpec {
            workers,
            alpha,
            function,
        });
    }
    let domain = levels[0].function.domain;
    let arrivals = config.arrivals(&domain)?;
    let outcome = multilevel::run_multilevel(&levels, &arrivals, config.options(), config.seed)
        .map_err(|e| reframe("levels", e))?;
    let comparison =
        match multilevel::compare_flat(&levels, &arrivals, config.options(), config.seed) {
            Ok(c) => Some(c),
            Err(Error::IncomparableLevels(_)) => None,
            Err(e) => return Err(e),
        };
    let tables = outcome
        .records
        .iter()
        .enumerate()
        .map(|(i, log)| (format!("records_level{}.csv", i + 1), records_csv(log)))
        .collect();
    Ok((
        json!({
            "rewards": outcome.rewards,
            "total": outcome.total,
            "heuristic": outcome.heuristic,
            "flat_comparison": comparison,
            "records": outcome.records,
        }),
        tables,
    ))
}

fn run_dsstap(config: &RunConfig) -> Result<ModeOutput> {
    let d = config
        .dsstap
        .as_ref()
        .ok_or_else(|| Error::config("dsstap", "required for mode dsstap"))?;
    let alpha = config.alpha()?;
    let f = config.function()?;
    let mc = MonteCarlo {
        samples: d.samples,
        seed: config.seed,
        closed_form: d.closed_form,
    };
    if d.rates.is_empty() {
        return Err(Error::config(
            "dsstap.rates",
            "at least one worker is required",
        ));
    }
    let iid = d.jobs.len() == 1;
    let square = d.jobs.len() == d.rates.len();
    if !iid && !square {
        return Err(Error::config(
            "dsstap.jobs",
            "give one distribution shared by all jobs or one per worker",
        ));
    }
    let mut result = serde_json::Map::new();
    let mut tables = Vec::new();
    if iid {
        let est = dsstap::expected_reward_case1(&d.jobs[0], &d.rates, &f, alpha, mc)
            .map_err(|e| reframe("dsstap", e))?;
        result.insert("expected_reward".into(), json!(est));
        if let Some(trials) = d.order_trials {
            let mut stream = rng::stream(config.seed, ORDER_STREAM, 0);
            let mut runs = Vec::new();
            for k in 0..2u64 {
                let order = dsstap::random_order(d.rates.len(), &mut stream);
                let seed = rng::derive_seed(config.seed, ORDER_STREAM, k + 1);
                let est = dsstap::simulate_fixed_assignment(
                    &d.jobs[0], &d.rates, &f, alpha, &order, trials, seed,
                )
                .map_err(|e| reframe("dsstap.order_trials", e))?;
                runs.push(json!({ "order": order, "reward": est }));
            }
            result.insert("fixed_orders".into(), Value::Array(runs));
        }
    }
    if square {
        let matrix = dsstap::estimate_prob_matrix(&d.jobs, &d.rates, &f, alpha, mc)
            .map_err(|e| reframe("dsstap", e))?;
        let best = dsstap::hungarian_max(&matrix);
        tables.push(("matrix.csv".to_owned(), matrix.to_csv()));
        result.insert("matrix".into(), json!(matrix));
        result.insert("assignment".into(), json!(best));
    }
    Ok((Value::Object(result), tables))
}

fn check_order(config: &RunConfig) -> Result<ModeOutput> {
    let f = config.function()?;
    let workers = config.workers()?;
    let probes: Vec<Job> = match &config.jobs {
        Some(_) => config
            .arrivals(&f.domain)?
            .iter()
            .enumerate()
            .map(|(k, a)| Job::new(k + 1, a.value))
            .collect(),
        None => Vec::new(),
    };
    let probes = f.probe_set(&probes);
    if probes.is_empty() {
        return Err(Error::config(
            "jobs",
            "a tabulated function needs probe jobs",
        ));
    }
    let verdict = check_order_preserving(&f, &probes, &workers).map_err(|e| reframe("jobs", e))?;
    Ok((
        json!({ "order": verdict, "probes": probes.len() }),
        Vec::new(),
    ))
}

/// One row of the threshold sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Figure1Row {
    pub alpha: f64,
    pub mean_passed: f64,
    pub std_dev: f64,
}

/// Threshold sweep for the ratio function `p/x` with rates `i/n`.
///
/// Trial `t` draws `n` jobs uniform on `[domain_lo, 1]` from the stream
/// `(seed, t)` and reuses them for every threshold. Each row reports the
/// mean and sample standard deviation of the reward over trials.
pub fn run_figure1(settings: &Figure1Config, seed: u64) -> Result<Vec<Figure1Row>> {
    settings.validate()?;
    let n = settings.n;
    let lo = settings.domain_lo;
    let f = ThresholdFunction::ratio(Domain::new(lo, 1.0)?)?;
    let rates: Vec<f64> = (1..=n).map(|i| i as f64 / n as f64).collect();
    let workers = crate::model::workers_from_rates(&rates);
    let thresholds = settings.thresholds();
    let instances = thresholds
        .iter()
        .map(|&alpha| Instance::new(alpha, f.clone(), workers.clone()).map(|i| i.with_seed(seed)))
        .collect::<Result<Vec<_>>>()?;

    let per_trial: Vec<Vec<u64>> = (0..settings.trials)
        .into_par_iter()
        .map(|t| {
            let mut stream = rng::stream(seed, t as u64, 0);
            let jobs: Vec<f64> = (0..n)
                .map(|_| lo + (1.0 - lo) * stream.random::<f64>())
                .collect();
            let arrivals = policy::simultaneous(&jobs);
            instances
                .iter()
                .map(|inst| {
                    Ok(policy::run_stream(inst, &arrivals, PolicyOptions::default())?.reward)
                })
                .collect::<Result<Vec<u64>>>()
        })
        .collect::<Result<_>>()?;

    let trials = settings.trials as f64;
    Ok(thresholds
        .iter()
        .enumerate()
        .map(|(k, &alpha)| {
            let mean = per_trial.iter().map(|r| r[k] as f64).sum::<f64>() / trials;
            let ss: f64 = per_trial.iter().map(|r| (r[k] as f64 - mean).powi(2)).sum();
            let std_dev = if settings.trials > 1 {
                (ss / (trials - 1.0)).sqrt()
            } else {
                0.0
            };
            Figure1Row {
                alpha,
                mean_passed: mean,
                std_dev,
            }
        })
        .collect())
}

pub fn figure1_csv(rows: &[Figure1Row]) -> String {
    let mut out = String::from("alpha,mean_passed,std_dev\n");
    for r in rows {
        writeln!(out, "{},{},{}", r.alpha, r.mean_passed, r.std_dev).expect("writing to a String");
    }
    out
}

pub fn records_csv(records: &[AssignmentRecord]) -> String {
    let mut out = String::from("job_id,value,outcome,worker_id,f_value\n");
    for r in records {
        let (outcome, worker, f_value) = match r.outcome {
            Outcome::Assigned { worker, f_value } => {
                ("assigned", worker.0.to_string(), f_value.to_string())
            }
            Outcome::Rejected => ("rejected", String::new(), String::new()),
        };
        writeln!(out, "{},{},{outcome},{worker},{f_value}", r.job.0, r.value)
            .expect("writing to a String");
    }
    out
}
