//! Threshold assignment with random worker rates.
//!
//! With i.i.d. job values the expected reward does not depend on the
//! assignment and equals `Σ_j Pr(f(X, P_j) >= α)`. With job-specific value
//! distributions the best one-shot assignment is a maximum-weight perfect
//! matching on `w_ij = Pr(f(X_i, P_j) >= α)`, solved here by Kuhn-Munkres.
//!
//! Probabilities come from closed forms when both marginals are point
//! masses, uniforms or empirical samples and `f` is a product or ratio;
//! otherwise from seeded Monte Carlo with one RNG stream per entry.

use std::fmt::Write as _;

use rand::distr::weighted::WeightedIndex;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::MixtureSpec;
use crate::error::{Error, Result};
use crate::function::{Domain, FunctionKind, ThresholdFunction};
use crate::rng;

/// Fewest Monte-Carlo samples accepted per probability.
pub const MIN_SAMPLES: usize = 1_000;
pub const DEFAULT_SAMPLES: usize = 100_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DistributionSpec {
    Uniform { a: f64, b: f64 },
    PointMass { c: f64 },
    TruncatedGaussianMixture { mixture: MixtureSpec },
    Empirical { samples: Vec<f64> },
}

impl DistributionSpec {
    /// Smallest and largest value the distribution can produce.
    pub fn support(&self) -> (f64, f64) {
        match self {
            DistributionSpec::Uniform { a, b } => (*a, *b),
            DistributionSpec::PointMass { c } => (*c, *c),
            DistributionSpec::TruncatedGaussianMixture { mixture } => {
                (mixture.domain.lo, mixture.domain.hi)
            }
            DistributionSpec::Empirical { samples } => samples
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &s| {
                    (lo.min(s), hi.max(s))
                }),
        }
    }

    fn validate_shape(&self) -> Result<()> {
        match self {
            DistributionSpec::Uniform { a, b } => {
                if !(a.is_finite() && b.is_finite() && a < b) {
                    return Err(Error::BadSpec(format!(
                        "uniform bounds {a}, {b} must be finite with a < b"
                    )));
                }
            }
            DistributionSpec::PointMass { c } => {
                if !c.is_finite() {
                    return Err(Error::BadSpec(format!("point mass at {c}")));
                }
            }
            DistributionSpec::TruncatedGaussianMixture { mixture } => {
                let total: f64 = mixture.weights.iter().sum();
                if mixture.centers.is_empty()
                    || mixture.centers.len() != mixture.weights.len()
                    || mixture.weights.iter().any(|&w| !(w > 0.0))
                    || (total - 1.0).abs() > 1e-9
                    || !(mixture.sigma > 0.0)
                {
                    return Err(Error::BadSpec("malformed mixture".into()));
                }
            }
            DistributionSpec::Empirical { samples } => {
                if samples.is_empty() || samples.iter().any(|s| !s.is_finite()) {
                    return Err(Error::BadSpec(
                        "empirical distribution needs finite samples".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Checks that every rate the distribution can produce lies in (0, 1].
    /// A uniform may start at 0, which it hits with probability zero.
    pub fn validate_rate(&self) -> Result<()> {
        self.validate_shape()?;
        let (lo, hi) = self.support();
        let lower_ok = match self {
            DistributionSpec::Uniform { .. }
            | DistributionSpec::TruncatedGaussianMixture { .. } => lo >= 0.0,
            _ => lo > 0.0,
        };
        if lower_ok && hi <= 1.0 {
            Ok(())
        } else {
            Err(Error::BadSpec(format!(
                "rate support [{lo}, {hi}] leaves (0, 1]"
            )))
        }
    }

    pub fn validate_job(&self, domain: &Domain) -> Result<()> {
        self.validate_shape()?;
        let (lo, hi) = self.support();
        if domain.contains(lo) && domain.contains(hi) {
            Ok(())
        } else {
            Err(Error::BadSpec(format!(
                "job support [{lo}, {hi}] leaves the domain [{}, {}]",
                domain.lo, domain.hi
            )))
        }
    }

    fn prepare(&self) -> Prepared<'_> {
        match self {
            DistributionSpec::Uniform { a, b } => Prepared::Uniform(*a, *b),
            DistributionSpec::PointMass { c } => Prepared::Point(*c),
            DistributionSpec::TruncatedGaussianMixture { mixture } => Prepared::Mixture(
                mixture,
                WeightedIndex::new(&mixture.weights).expect("validated weights"),
            ),
            DistributionSpec::Empirical { samples } => Prepared::Empirical(samples),
        }
    }

    pub fn sample(&self, rng: &mut impl Rng) -> f64 {
        self.prepare().sample(rng)
    }
}

enum Prepared<'a> {
    Uniform(f64, f64),
    Point(f64),
    Mixture(&'a MixtureSpec, WeightedIndex<f64>),
    Empirical(&'a [f64]),
}

impl Prepared<'_> {
    fn sample(&self, rng: &mut impl Rng) -> f64 {
        match self {
            Prepared::Uniform(a, b) => {
                // Half-open [a, b) draw; b itself has probability zero.
                a + (b - a) * rng.random::<f64>()
            }
            Prepared::Point(c) => *c,
            Prepared::Mixture(mixture, index) => loop {
                let k = index.sample(rng);
                let z: f64 = StandardNormal.sample(rng);
                let x = mixture.centers[k] + mixture.sigma * z;
                if mixture.domain.contains(x) {
                    break x;
                }
            },
            Prepared::Empirical(samples) => samples[rng.random_range(0..samples.len())],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonteCarlo {
    pub samples: usize,
    pub seed: u64,
    /// Use exact probabilities where a closed form exists.
    #[serde(default = "default_true")]
    pub closed_form: bool,
}

fn default_true() -> bool {
    true
}

impl MonteCarlo {
    pub fn new(samples: usize, seed: u64) -> Self {
        MonteCarlo {
            samples,
            seed,
            closed_form: true,
        }
    }

    /// Sampling even where a closed form exists.
    pub fn sampled_only(samples: usize, seed: u64) -> Self {
        MonteCarlo {
            closed_form: false,
            ..MonteCarlo::new(samples, seed)
        }
    }

    fn validate(&self) -> Result<()> {
        if self.samples < MIN_SAMPLES {
            return Err(Error::BadSpec(format!(
                "Monte Carlo needs at least {MIN_SAMPLES} samples, got {}",
                self.samples
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
}

fn check_function(f: &ThresholdFunction) -> Result<()> {
    f.validate()?;
    if f.is_analytic() {
        Ok(())
    } else {
        Err(Error::BadSpec(
            "random rates need a product or ratio threshold function".into(),
        ))
    }
}

/// `Pr(f(x, P) >= α)` for a fixed job value, when available in closed form.
fn given_job(x: f64, gp: &DistributionSpec, f: &ThresholdFunction, alpha: f64) -> Option<f64> {
    match gp {
        DistributionSpec::PointMass { c } => Some(indicator(f, alpha, x, *c)),
        DistributionSpec::Empirical { samples } => Some(
            samples
                .iter()
                .map(|&p| indicator(f, alpha, x, p))
                .sum::<f64>()
                / samples.len() as f64,
        ),
        DistributionSpec::Uniform { a, b } => {
            let len = b - a;
            let above = |t: f64| ((b - t.max(*a)) / len).clamp(0.0, 1.0);
            let below = |t: f64| ((t.min(*b) - a) / len).clamp(0.0, 1.0);
            Some(match f.kind {
                FunctionKind::Product if x > 0.0 => above(alpha / x),
                FunctionKind::Product if x < 0.0 => below(alpha / x),
                FunctionKind::Product => f64::from(u8::from(0.0 >= alpha)),
                FunctionKind::Ratio => above(alpha * x),
                FunctionKind::Tabulated { .. } => return None,
            })
        }
        DistributionSpec::TruncatedGaussianMixture { .. } => None,
    }
}

fn indicator(f: &ThresholdFunction, alpha: f64, x: f64, p: f64) -> f64 {
    match f.eval_at(x, p) {
        Ok(v) if v >= alpha => 1.0,
        _ => 0.0,
    }
}

/// `Pr(f(X, p) >= α)` for a uniform job value and a fixed rate.
fn uniform_job_fixed_rate(a: f64, b: f64, p: f64, f: &ThresholdFunction, alpha: f64) -> f64 {
    let len = b - a;
    match f.kind {
        // x·p >= α  <=>  x >= α/p
        FunctionKind::Product => ((b - (alpha / p).max(a)) / len).clamp(0.0, 1.0),
        // p/x >= α  <=>  x <= p/α on a positive domain
        FunctionKind::Ratio if alpha > 0.0 => (((p / alpha).min(b) - a) / len).clamp(0.0, 1.0),
        FunctionKind::Ratio => 1.0,
        FunctionKind::Tabulated { .. } => unreachable!("checked by caller"),
    }
}

/// Both marginals uniform: integrate the rate survival function against the
/// job density piecewise.
fn uniform_uniform(
    (a, b): (f64, f64),
    (c, d): (f64, f64),
    f: &ThresholdFunction,
    alpha: f64,
) -> Option<f64> {
    if a < 0.0 {
        return None;
    }
    if alpha <= 0.0 {
        return Some(1.0);
    }
    let len = b - a;
    let overlap = |lo: f64, hi: f64| (hi.min(b) - lo.max(a)).max(0.0);
    match f.kind {
        // Survival S(α/x): 1 for x >= α/c, 0 for x <= α/d, (d - α/x)/(d - c) between.
        FunctionKind::Product => {
            let full_from = if c > 0.0 { alpha / c } else { f64::INFINITY };
            let zero_until = alpha / d;
            let mut total = overlap(full_from, f64::INFINITY);
            let (lo, hi) = (zero_until.max(a), full_from.min(b));
            if lo < hi {
                let anti = |x: f64| d * x - alpha * x.ln();
                total += (anti(hi) - anti(lo)) / (d - c);
            }
            Some((total / len).clamp(0.0, 1.0))
        }
        // Survival S(αx): 1 for x <= c/α, 0 for x >= d/α, (d - αx)/(d - c) between.
        FunctionKind::Ratio => {
            let full_until = c / alpha;
            let zero_from = d / alpha;
            let mut total = overlap(f64::NEG_INFINITY, full_until);
            let (lo, hi) = (full_until.max(a), zero_from.min(b));
            if lo < hi {
                let anti = |x: f64| d * x - 0.5 * alpha * x * x;
                total += (anti(hi) - anti(lo)) / (d - c);
            }
            Some((total / len).clamp(0.0, 1.0))
        }
        FunctionKind::Tabulated { .. } => None,
    }
}

/// Exact `Pr(f(X, P) >= α)` when the pair of marginals admits one.
pub fn closed_form_probability(
    gx: &DistributionSpec,
    gp: &DistributionSpec,
    f: &ThresholdFunction,
    alpha: f64,
) -> Option<f64> {
    if !f.is_analytic() {
        return None;
    }
    match gx {
        DistributionSpec::PointMass { c } => given_job(*c, gp, f, alpha),
        DistributionSpec::Empirical { samples } => {
            let mut total = 0.0;
            for &x in samples {
                total += given_job(x, gp, f, alpha)?;
            }
            Some(total / samples.len() as f64)
        }
        DistributionSpec::Uniform { a, b } => match gp {
            DistributionSpec::PointMass { c } => Some(uniform_job_fixed_rate(*a, *b, *c, f, alpha)),
            DistributionSpec::Empirical { samples } => Some(
                samples
                    .iter()
                    .map(|&p| uniform_job_fixed_rate(*a, *b, p, f, alpha))
                    .sum::<f64>()
                    / samples.len() as f64,
            ),
            DistributionSpec::Uniform { a: c, b: d } => {
                uniform_uniform((*a, *b), (*c, *d), f, alpha)
            }
            DistributionSpec::TruncatedGaussianMixture { .. } => None,
        },
        DistributionSpec::TruncatedGaussianMixture { .. } => None,
    }
}

/// Fraction of sampled `(X, P)` pairs passing the threshold.
fn sampled_probability(
    gx: &DistributionSpec,
    gp: &DistributionSpec,
    f: &ThresholdFunction,
    alpha: f64,
    samples: usize,
    rng: &mut ChaCha8Rng,
) -> Estimate {
    let (px, pp) = (gx.prepare(), gp.prepare());
    let mut hits = 0usize;
    for _ in 0..samples {
        let x = px.sample(rng);
        let p = pp.sample(rng);
        if indicator(f, alpha, x, p) == 1.0 {
            hits += 1;
        }
    }
    let value = hits as f64 / samples as f64;
    Estimate {
        value,
        std_error: (value * (1.0 - value) / samples as f64).sqrt(),
    }
}

fn entry(
    gx: &DistributionSpec,
    gp: &DistributionSpec,
    f: &ThresholdFunction,
    alpha: f64,
    mc: &MonteCarlo,
    (i, j): (usize, usize),
) -> (Estimate, bool) {
    if mc.closed_form {
        if let Some(value) = closed_form_probability(gx, gp, f, alpha) {
            return (
                Estimate {
                    value,
                    std_error: 0.0,
                },
                true,
            );
        }
    }
    let mut stream = rng::stream(mc.seed, i as u64, j as u64);
    (
        sampled_probability(gx, gp, f, alpha, mc.samples, &mut stream),
        false,
    )
}

fn validate_inputs(
    gx: &[&DistributionSpec],
    gp: &[DistributionSpec],
    f: &ThresholdFunction,
    alpha: f64,
    mc: &MonteCarlo,
) -> Result<()> {
    check_function(f)?;
    mc.validate()?;
    if !alpha.is_finite() {
        return Err(Error::BadSpec(format!("threshold {alpha} is not finite")));
    }
    for g in gx {
        g.validate_job(&f.domain)?;
    }
    for g in gp {
        g.validate_rate()?;
    }
    Ok(())
}

/// Expected reward with i.i.d. job values: `Σ_j Pr(f(X, P_j) >= α)`.
///
/// Term `j` uses the same RNG stream as entry `(0, j)` of
/// [`estimate_prob_matrix`].
pub fn expected_reward_case1(
    gx: &DistributionSpec,
    gp: &[DistributionSpec],
    f: &ThresholdFunction,
    alpha: f64,
    mc: MonteCarlo,
) -> Result<Estimate> {
    validate_inputs(&[gx], gp, f, alpha, &mc)?;
    let terms: Vec<Estimate> = gp
        .par_iter()
        .enumerate()
        .map(|(j, g)| entry(gx, g, f, alpha, &mc, (0, j)).0)
        .collect();
    Ok(Estimate {
        value: terms.iter().map(|t| t.value).sum(),
        std_error: terms
            .iter()
            .map(|t| t.std_error.powi(2))
            .sum::<f64>()
            .sqrt(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    ClosedForm,
    /// At least one entry was sampled; exact entries carry a zero error.
    MonteCarlo {
        samples: usize,
        seed: u64,
    },
    /// Weights given directly by the caller.
    Supplied,
}

/// Square matrix of `w_ij = Pr(f(X_i, P_j) >= α)`, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityMatrix {
    pub n: usize,
    pub weights: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub provenance: Provenance,
}

impl ProbabilityMatrix {
    /// Wraps caller-supplied weights. Entries must be finite; they need not
    /// be probabilities when used only for matching.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::BadSpec("weight matrix is not square".into()));
        }
        let weights: Vec<f64> = rows.iter().flatten().copied().collect();
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::BadSpec(
                "weight matrix has non-finite entries".into(),
            ));
        }
        Ok(ProbabilityMatrix {
            n,
            std_errors: vec![0.0; weights.len()],
            weights,
            provenance: Provenance::Supplied,
        })
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.weights[i * self.n + j]
    }

    pub fn std_error(&self, i: usize, j: usize) -> f64 {
        self.std_errors[i * self.n + j]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.weights
            .chunks(self.n.max(1))
            .map(<[f64]>::to_vec)
            .collect()
    }

    /// Row-major CSV with 1-based indices: `i,j,w,std_error`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("i,j,w,std_error\n");
        for i in 0..self.n {
            for j in 0..self.n {
                writeln!(
                    out,
                    "{},{},{},{}",
                    i + 1,
                    j + 1,
                    self.get(i, j),
                    self.std_error(i, j)
                )
                .expect("writing to a String");
            }
        }
        out
    }
}

/// Fills every `w_ij`, exactly where possible, otherwise by Monte Carlo
/// with the stream derived from `(seed, i, j)`.
pub fn estimate_prob_matrix(
    gx: &[DistributionSpec],
    gp: &[DistributionSpec],
    f: &ThresholdFunction,
    alpha: f64,
    mc: MonteCarlo,
) -> Result<ProbabilityMatrix> {
    if gx.len() != gp.len() {
        return Err(Error::BadSpec(format!(
            "{} job distributions but {} rate distributions",
            gx.len(),
            gp.len()
        )));
    }
    let refs: Vec<&DistributionSpec> = gx.iter().collect();
    validate_inputs(&refs, gp, f, alpha, &mc)?;
    let n = gx.len();
    let cells: Vec<(Estimate, bool)> = (0..n * n)
        .into_par_iter()
        .map(|k| {
            let (i, j) = (k / n, k % n);
            entry(&gx[i], &gp[j], f, alpha, &mc, (i, j))
        })
        .collect();
    let exact = cells.iter().all(|(_, exact)| *exact);
    Ok(ProbabilityMatrix {
        n,
        weights: cells.iter().map(|(e, _)| e.value).collect(),
        std_errors: cells.iter().map(|(e, _)| e.std_error).collect(),
        provenance: if exact {
            Provenance::ClosedForm
        } else {
            Provenance::MonteCarlo {
                samples: mc.samples,
                seed: mc.seed,
            }
        },
    })
}

/// Perfect matching of jobs (rows) to workers (columns).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assignment {
    /// `permutation[i]` is the worker column given to job row `i`.
    pub permutation: Vec<usize>,
    pub total: f64,
}

/// Maximum-weight perfect matching of a square matrix.
pub fn hungarian_max(weights: &ProbabilityMatrix) -> Assignment {
    max_weight_assignment(weights.n, &weights.weights)
}

/// Kuhn-Munkres with row and column potentials on the negated weights,
/// `O(n³)`. `weights` is row-major `n × n`.
pub fn max_weight_assignment(n: usize, weights: &[f64]) -> Assignment {
    assert_eq!(weights.len(), n * n, "weights must be n × n");
    let cost = |i: usize, j: usize| -weights[(i - 1) * n + (j - 1)];
    // 1-based arrays with a virtual column 0.
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; n + 1];
    let mut owner = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];

    for row in 1..=n {
        owner[0] = row;
        let mut col0 = 0;
        let mut min_to = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[col0] = true;
            let i0 = owner[col0];
            let mut delta = f64::INFINITY;
            let mut col1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let reduced = cost(i0, j) - u[i0] - v[j];
                if reduced < min_to[j] {
                    min_to[j] = reduced;
                    way[j] = col0;
                }
                if min_to[j] < delta {
                    delta = min_to[j];
                    col1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    min_to[j] -= delta;
                }
            }
            col0 = col1;
            if owner[col0] == 0 {
                break;
            }
        }
        loop {
            let prev = way[col0];
            owner[col0] = owner[prev];
            col0 = prev;
            if col0 == 0 {
                break;
            }
        }
    }

    let mut permutation = vec![0; n];
    for j in 1..=n {
        permutation[owner[j] - 1] = j - 1;
    }
    let total = permutation
        .iter()
        .enumerate()
        .map(|(i, &j)| weights[i * n + j])
        .sum();
    Assignment { permutation, total }
}

/// Mean realised reward when job `i` (i.i.d. from `gx`) always goes to
/// worker `order[i]`, with fresh rates drawn every trial.
pub fn simulate_fixed_assignment(
    gx: &DistributionSpec,
    gp: &[DistributionSpec],
    f: &ThresholdFunction,
    alpha: f64,
    order: &[usize],
    trials: usize,
    seed: u64,
) -> Result<Estimate> {
    let mc = MonteCarlo::new(trials, seed);
    validate_inputs(&[gx], gp, f, alpha, &mc)?;
    let mut sorted = order.to_vec();
    sorted.sort_unstable();
    if sorted != (0..gp.len()).collect::<Vec<_>>() {
        return Err(Error::BadSpec(
            "order must be a permutation of the workers".into(),
        ));
    }
    let px = gx.prepare();
    let pp: Vec<Prepared<'_>> = gp.iter().map(DistributionSpec::prepare).collect();
    let mut stream = rng::stream(seed, u64::MAX, 0);
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for _ in 0..trials {
        let rates: Vec<f64> = pp.iter().map(|d| d.sample(&mut stream)).collect();
        let reward: f64 = order
            .iter()
            .map(|&j| indicator(f, alpha, px.sample(&mut stream), rates[j]))
            .sum();
        sum += reward;
        sum_sq += reward * reward;
    }
    let t = trials as f64;
    let mean = sum / t;
    let var = ((sum_sq - t * mean * mean) / (t - 1.0)).max(0.0);
    Ok(Estimate {
        value: mean,
        std_error: (var / t).sqrt(),
    })
}

/// A uniformly random permutation of `0..n`.
pub fn random_order(n: usize, rng: &mut impl Rng) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    order
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn product() -> ThresholdFunction {
        ThresholdFunction::product(Domain::unit())
    }

    fn points(cs: &[f64]) -> Vec<DistributionSpec> {
        cs.iter()
            .map(|&c| DistributionSpec::PointMass { c })
            .collect()
    }

    const UNIT: DistributionSpec = DistributionSpec::Uniform { a: 0.0, b: 1.0 };

    #[test]
    fn zero_threshold_is_always_met() {
        let gp = vec![
            DistributionSpec::Uniform { a: 0.2, b: 0.9 },
            DistributionSpec::Empirical {
                samples: vec![0.3, 0.6],
            },
            DistributionSpec::PointMass { c: 1.0 },
        ];
        let est =
            expected_reward_case1(&UNIT, &gp, &product(), 0.0, MonteCarlo::new(1000, 1)).unwrap();
        assert_eq!(est.value, 3.0);
        assert_eq!(est.std_error, 0.0);
    }

    #[test]
    fn half_of_uniform_jobs_pass() {
        let gp = points(&[1.0; 6]);
        let est =
            expected_reward_case1(&UNIT, &gp, &product(), 0.5, MonteCarlo::new(1000, 1)).unwrap();
        assert_eq!(est.value, 3.0);
        assert_eq!(est.std_error, 0.0);
    }

    #[test]
    fn first_example_rates_against_uniform_jobs() {
        let gp = points(&[0.4, 0.5, 0.6, 0.7]);
        let est =
            expected_reward_case1(&UNIT, &gp, &product(), 0.15, MonteCarlo::new(1000, 1)).unwrap();
        let oracle: f64 = [0.4, 0.5, 0.6, 0.7].iter().map(|p| 1.0 - 0.15 / p).sum();
        assert!((est.value - oracle).abs() < 1e-12);
        assert!((est.value - 2.8607).abs() < 1e-4);
    }

    #[test]
    fn too_few_samples() {
        assert!(expected_reward_case1(
            &UNIT,
            &points(&[0.5]),
            &product(),
            0.1,
            MonteCarlo::new(10, 1)
        )
        .is_err());
    }

    #[test]
    fn out_of_support_specs() {
        let mc = MonteCarlo::new(1000, 1);
        assert!(expected_reward_case1(&UNIT, &points(&[1.2]), &product(), 0.1, mc).is_err());
        assert!(expected_reward_case1(&UNIT, &points(&[0.0]), &product(), 0.1, mc).is_err());
        let wide = DistributionSpec::Uniform { a: 0.5, b: 1.5 };
        assert!(expected_reward_case1(&wide, &points(&[0.5]), &product(), 0.1, mc).is_err());
        let reversed = DistributionSpec::Uniform { a: 0.5, b: 0.1 };
        assert!(expected_reward_case1(&UNIT, &[reversed], &product(), 0.1, mc).is_err());
        let table = ThresholdFunction::tabulated(Default::default(), Domain::unit());
        assert!(expected_reward_case1(&UNIT, &points(&[0.5]), &table, 0.1, mc).is_err());
    }

    #[test]
    fn point_masses_give_indicators() {
        let gx = points(&[0.2, 0.5, 0.9]);
        let gp = points(&[0.3, 0.6, 1.0]);
        let m = estimate_prob_matrix(&gx, &gp, &product(), 0.25, MonteCarlo::new(1000, 0)).unwrap();
        assert_eq!(m.provenance, Provenance::ClosedForm);
        for i in 0..3 {
            for j in 0..3 {
                let want = if [0.2, 0.5, 0.9][i] * [0.3, 0.6, 1.0][j] >= 0.25 {
                    1.0
                } else {
                    0.0
                };
                assert_eq!(m.get(i, j), want);
            }
        }
    }

    #[test]
    fn sampled_entries_agree_with_closed_form() {
        let rates = [0.2, 0.45, 0.8, 1.0];
        let gx = vec![UNIT; 4];
        let gp = points(&rates);
        let alpha = 0.3;
        let exact =
            estimate_prob_matrix(&gx, &gp, &product(), alpha, MonteCarlo::new(1000, 3)).unwrap();
        let sampled = estimate_prob_matrix(
            &gx,
            &gp,
            &product(),
            alpha,
            MonteCarlo::sampled_only(100_000, 3),
        )
        .unwrap();
        assert!(matches!(sampled.provenance, Provenance::MonteCarlo { .. }));
        for i in 0..4 {
            for (j, p) in rates.iter().enumerate() {
                let want = (1.0 - alpha / p).clamp(0.0, 1.0);
                assert!((exact.get(i, j) - want).abs() < 1e-12);
                let se = sampled.std_error(i, j).max(1e-12);
                assert!((sampled.get(i, j) - want).abs() <= 3.0 * se + 1e-12);
            }
        }
    }

    #[test]
    fn uniform_pairs_agree_with_sampling() {
        let ratio = ThresholdFunction::ratio(Domain::new(0.05, 1.0).unwrap()).unwrap();
        let cases = [
            (product(), (0.0, 1.0), (0.0, 1.0), 0.3),
            (product(), (0.2, 0.9), (0.3, 0.7), 0.2),
            (product(), (0.5, 1.0), (0.1, 0.4), 0.05),
            (ratio.clone(), (0.05, 1.0), (0.1, 0.9), 1.0),
            (ratio, (0.3, 0.6), (0.2, 1.0), 2.5),
        ];
        for (k, (f, (a, b), (c, d), alpha)) in cases.into_iter().enumerate() {
            let gx = DistributionSpec::Uniform { a, b };
            let gp = DistributionSpec::Uniform { a: c, b: d };
            let exact = closed_form_probability(&gx, &gp, &f, alpha).unwrap();
            let mut stream = ChaCha8Rng::seed_from_u64(k as u64);
            let est = sampled_probability(&gx, &gp, &f, alpha, 400_000, &mut stream);
            assert!(
                (est.value - exact).abs() <= 4.0 * est.std_error + 1e-9,
                "case {k}: {exact} vs {est:?}"
            );
        }
    }

    #[test]
    fn two_by_two_closed_form() {
        // Rows: job fixed at 0.8 or 0.3; columns: rates U(0.2, 0.6) and U(0, 1).
        let gx = points(&[0.8, 0.3]);
        let gp = vec![
            DistributionSpec::Uniform { a: 0.2, b: 0.6 },
            DistributionSpec::Uniform { a: 0.0, b: 1.0 },
        ];
        let m = estimate_prob_matrix(&gx, &gp, &product(), 0.24, MonteCarlo::new(1000, 0)).unwrap();
        assert_eq!(m.provenance, Provenance::ClosedForm);
        let want = [[0.75, 0.7], [0.0, 0.2]];
        for (i, row) in want.iter().enumerate() {
            for (j, w) in row.iter().enumerate() {
                assert!((m.get(i, j) - w).abs() < 1e-12, "{:?}", m.rows());
            }
        }
        let best = hungarian_max(&m);
        assert_eq!(best.permutation, vec![0, 1]);
        assert!((best.total - 0.95).abs() < 1e-12);
    }

    #[test]
    fn hungarian_small_cases() {
        let m = ProbabilityMatrix::from_rows(&[vec![0.9, 0.2], vec![0.3, 0.8]]).unwrap();
        let best = hungarian_max(&m);
        assert_eq!(best.permutation, vec![0, 1]);
        assert!((best.total - 1.7).abs() < 1e-12);

        let n = 5;
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|j| f64::from(u8::from(i == j))).collect())
            .collect();
        let best = hungarian_max(&ProbabilityMatrix::from_rows(&rows).unwrap());
        assert_eq!(best.permutation, (0..n).collect::<Vec<_>>());
        assert_eq!(best.total, n as f64);

        let empty = hungarian_max(&ProbabilityMatrix::from_rows(&[]).unwrap());
        assert!(empty.permutation.is_empty());
        assert_eq!(empty.total, 0.0);
    }

    #[test]
    fn csv_layout() {
        let m = ProbabilityMatrix::from_rows(&[vec![0.9, 0.2], vec![0.3, 0.8]]).unwrap();
        assert_eq!(
            m.to_csv(),
            "i,j,w,std_error\n1,1,0.9,0\n1,2,0.2,0\n2,1,0.3,0\n2,2,0.8,0\n"
        );
    }

    #[test]
    fn matrix_is_independent_of_thread_count() {
        let gx: Vec<DistributionSpec> = (0..5)
            .map(|i| DistributionSpec::Uniform {
                a: 0.0,
                b: 0.5 + 0.1 * i as f64,
            })
            .collect();
        let gp: Vec<DistributionSpec> = (0..5)
            .map(|j| DistributionSpec::Uniform {
                a: 0.1 * j as f64,
                b: 1.0,
            })
            .collect();
        let mc = MonteCarlo::sampled_only(5_000, 99);
        let parallel = estimate_prob_matrix(&gx, &gp, &product(), 0.2, mc).unwrap();
        let single = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| estimate_prob_matrix(&gx, &gp, &product(), 0.2, mc).unwrap());
        assert_eq!(parallel, single);
    }

    #[test]
    fn case1_matches_first_matrix_row() {
        let gx = DistributionSpec::Uniform { a: 0.1, b: 0.9 };
        let gp = vec![
            DistributionSpec::Uniform { a: 0.2, b: 0.7 },
            DistributionSpec::PointMass { c: 0.5 },
            DistributionSpec::Empirical {
                samples: vec![0.3, 0.9],
            },
        ];
        let mc = MonteCarlo::sampled_only(20_000, 5);
        let case1 = expected_reward_case1(&gx, &gp, &product(), 0.2, mc).unwrap();
        let m = estimate_prob_matrix(&vec![gx; 3], &gp, &product(), 0.2, mc).unwrap();
        let row_sum: f64 = (0..3).map(|j| m.get(0, j)).sum();
        assert_eq!(case1.value, row_sum);
        for i in 1..3 {
            let other: f64 = (0..3).map(|j| m.get(i, j)).sum();
            assert!((other - row_sum).abs() <= 4.0 * case1.std_error * 2f64.sqrt());
        }
    }

    #[test]
    fn standard_errors_shrink_with_root_samples() {
        let gx = vec![UNIT; 3];
        let gp = points(&[0.3, 0.6, 0.9]);
        let se = |samples| {
            let m = estimate_prob_matrix(
                &gx,
                &gp,
                &product(),
                0.2,
                MonteCarlo::sampled_only(samples, 8),
            )
            .unwrap();
            m.std_errors.iter().sum::<f64>() / m.std_errors.len() as f64
        };
        let (base, doubled, quadrupled) = (se(10_000), se(20_000), se(40_000));
        let root_two = base / doubled;
        assert!((root_two / 2f64.sqrt() - 1.0).abs() <= 0.2, "{root_two}");
        let half = base / quadrupled;
        assert!((half / 2.0 - 1.0).abs() <= 0.2, "{half}");
    }

    #[test]
    fn mixture_jobs_are_sampled() {
        let mixture = crate::analysis::build_reward_maximizing_mixture(
            &[0.5],
            crate::analysis::Side::Upper,
            1e-6,
            1e-3,
            Domain::unit(),
        )
        .unwrap();
        let gx = DistributionSpec::TruncatedGaussianMixture { mixture };
        // Jobs sit at 0.5 ± 0.003; rate 0.5 needs x >= 0.5, roughly half pass.
        let est = expected_reward_case1(
            &gx,
            &points(&[0.5]),
            &product(),
            0.25,
            MonteCarlo::new(50_000, 4),
        )
        .unwrap();
        assert!((est.value - 0.5).abs() < 0.02, "{est:?}");
        assert!(est.std_error > 0.0);
    }

    #[test]
    fn fixed_assignments_have_equal_means() {
        let gp = vec![
            DistributionSpec::Uniform { a: 0.1, b: 0.5 },
            DistributionSpec::PointMass { c: 0.8 },
            DistributionSpec::Uniform { a: 0.4, b: 1.0 },
        ];
        let a =
            simulate_fixed_assignment(&UNIT, &gp, &product(), 0.2, &[0, 1, 2], 40_000, 1).unwrap();
        let b =
            simulate_fixed_assignment(&UNIT, &gp, &product(), 0.2, &[2, 0, 1], 40_000, 2).unwrap();
        let combined = (a.std_error.powi(2) + b.std_error.powi(2)).sqrt();
        assert!((a.value - b.value).abs() < 3.0 * combined);
        assert!(
            simulate_fixed_assignment(&UNIT, &gp, &product(), 0.2, &[0, 0, 1], 2_000, 1).is_err()
        );
    }

    mod brute_force {
        use super::*;
        use proptest::prelude::*;

        fn best_by_enumeration(n: usize, w: &[f64]) -> f64 {
            fn go(n: usize, w: &[f64], row: usize, used: &mut Vec<bool>) -> f64 {
                if row == n {
                    return 0.0;
                }
                let mut best = f64::NEG_INFINITY;
                for j in 0..n {
                    if !used[j] {
                        used[j] = true;
                        best = best.max(w[row * n + j] + go(n, w, row + 1, used));
                        used[j] = false;
                    }
                }
                best
            }
            go(n, w, 0, &mut vec![false; n])
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(500))]
            #[test]
            fn hungarian_matches_enumeration(
                (n, w) in (1usize..=7).prop_flat_map(|n| (Just(n), prop::collection::vec(-1.0f64..1.0, n * n))),
                seed in any::<u64>(),
            ) {
                let best = max_weight_assignment(n, &w);
                prop_assert!((best.total - best_by_enumeration(n, &w)).abs() <= 1e-9);
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                for _ in 0..100 {
                    let order = random_order(n, &mut rng);
                    let total: f64 = order.iter().enumerate().map(|(i, &j)| w[i * n + j]).sum();
                    prop_assert!(best.total >= total - 1e-12);
                }
            }
        }
    }
}
