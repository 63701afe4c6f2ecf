//! Load analysis for fully served job sets.
//!
//! For every worker rate `p` the jobs it can serve form an interval
//! `[v, u]` of the domain. When the greedy policy serves all `n` jobs, the
//! Euclidean load of the job values is squeezed between the loads of the
//! lower ends `N = {v_i}` and the upper ends `M = {u_i}`.
//!
//! Job distributions concentrated just inside those ends (a point mass on
//! each shifted extreme, smoothed into a narrow truncated Gaussian mixture)
//! keep every job servable.

use rand::distr::weighted::WeightedIndex;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::function::{Domain, Monotonicity, ThresholdFunction};
use crate::model::Instance;
use crate::policy::{run_stream, simultaneous, PolicyOptions};

/// Absolute width at which bisection stops.
pub const BISECTION_TOLERANCE: f64 = 1e-12;
/// Largest accepted gap between the closed-form and bisected extremes.
pub const EXTREME_AGREEMENT: f64 = 1e-10;
/// Shifted extremes closer than this merge into one mixture center.
pub const MERGE_TOLERANCE: f64 = 1e-9;
/// Relative accuracy of the mixture normalizer.
pub const NORMALIZER_TOLERANCE: f64 = 1e-9;

/// Euclidean norm of the job values. Squares are summed in ascending order
/// so that elementwise-dominated inputs never compare the wrong way.
pub fn job_load(values: &[f64]) -> f64 {
    let mut squares: Vec<f64> = values.iter().map(|x| x * x).collect();
    squares.sort_by(f64::total_cmp);
    squares.iter().sum::<f64>().sqrt()
}

/// Ends of the set of job values a worker can serve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Extremes {
    /// Largest servable job value.
    pub u: f64,
    /// Smallest servable job value.
    pub v: f64,
}

/// Ends of `{x in Ω : f(x, p) >= α}` from the inverse of `f`, snapped to the
/// exact boundary in floating point and checked against bisection.
pub fn feasible_extremes(f: &ThresholdFunction, alpha: f64, p: f64) -> Result<Extremes> {
    let closed = closed_form_extremes(f, alpha, p)?;
    let bisected = bisect_extremes(f, alpha, p)?;
    for (a, b) in [(closed.u, bisected.u), (closed.v, bisected.v)] {
        if (a - b).abs() > EXTREME_AGREEMENT {
            return Err(Error::Numerical {
                closed: a,
                bisected: b,
            });
        }
    }
    Ok(closed)
}

fn passes(f: &ThresholdFunction, alpha: f64, p: f64, x: f64) -> Result<bool> {
    Ok(f.eval_at(x, p)? >= alpha)
}

fn infeasible(f: &ThresholdFunction, alpha: f64, p: f64) -> Error {
    Error::Infeasible {
        rate: p,
        alpha,
        lo: f.domain.lo,
        hi: f.domain.hi,
    }
}

fn closed_form_extremes(f: &ThresholdFunction, alpha: f64, p: f64) -> Result<Extremes> {
    let Domain { lo, hi } = f.domain;
    match f.monotonicity() {
        Monotonicity::Increasing => {
            if !passes(f, alpha, p, hi)? {
                return Err(infeasible(f, alpha, p));
            }
            // x * p >= α  <=>  x >= α / p
            let mut v = (alpha / p).clamp(lo, hi);
            while !passes(f, alpha, p, v)? {
                v = v.next_up().min(hi);
            }
            while v > lo && passes(f, alpha, p, v.next_down().max(lo))? {
                v = v.next_down().max(lo);
            }
            Ok(Extremes { u: hi, v })
        }
        Monotonicity::Decreasing => {
            if !passes(f, alpha, p, lo)? {
                return Err(infeasible(f, alpha, p));
            }
            // p / x >= α  <=>  x <= p / α  for α > 0
            let mut u = if alpha > 0.0 {
                (p / alpha).clamp(lo, hi)
            } else {
                hi
            };
            while !passes(f, alpha, p, u)? {
                u = u.next_down().max(lo);
            }
            while u < hi && passes(f, alpha, p, u.next_up().min(hi))? {
                u = u.next_up().min(hi);
            }
            Ok(Extremes { u, v: lo })
        }
        Monotonicity::Unknown => Err(Error::NotMonotone),
    }
}

/// Ends of the feasible set by bisection on the threshold test alone.
pub fn bisect_extremes(f: &ThresholdFunction, alpha: f64, p: f64) -> Result<Extremes> {
    let Domain { lo, hi } = f.domain;
    let increasing = match f.monotonicity() {
        Monotonicity::Increasing => true,
        Monotonicity::Decreasing => false,
        Monotonicity::Unknown => return Err(Error::NotMonotone),
    };
    let (inside, outside) = if increasing { (hi, lo) } else { (lo, hi) };
    if !passes(f, alpha, p, inside)? {
        return Err(infeasible(f, alpha, p));
    }
    let boundary = if passes(f, alpha, p, outside)? {
        outside
    } else {
        let (mut good, mut bad) = (inside, outside);
        while (good - bad).abs() > BISECTION_TOLERANCE {
            let mid = 0.5 * (good + bad);
            if passes(f, alpha, p, mid)? {
                good = mid;
            } else {
                bad = mid;
            }
        }
        good
    };
    Ok(if increasing {
        Extremes { u: hi, v: boundary }
    } else {
        Extremes { u: boundary, v: lo }
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LoadVerdict {
    /// Not every job was served, so the bounds say nothing.
    Vacuous,
    BoundsHold,
    /// `l(N) <= l(X) <= l(M)` failed although every job was served.
    BoundsViolated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadReport {
    /// Upper extremes `u_i` in worker order.
    pub u: Vec<f64>,
    /// Lower extremes `v_i` in worker order.
    pub v: Vec<f64>,
    pub l_m: f64,
    pub l_n: f64,
    pub l_x: f64,
    pub reward: u64,
    pub verdict: LoadVerdict,
}

/// Extremes of every worker in the instance, in worker order.
pub fn extremes_of(instance: &Instance) -> Result<Vec<Extremes>> {
    instance
        .workers
        .iter()
        .map(|w| feasible_extremes(&instance.function, instance.alpha, w.rate))
        .collect()
}

/// Runs the greedy policy on `jobs` and, when all of them are served,
/// checks `l(N) <= l(X) <= l(M)`.
///
/// Needs as many jobs as workers and a domain without negative values.
pub fn verify_load_bounds(instance: &Instance, jobs: &[f64]) -> Result<LoadReport> {
    if jobs.len() != instance.workers.len() {
        return Err(Error::InvalidInstance(format!(
            "load bounds compare {} jobs against {} workers; the counts must match",
            jobs.len(),
            instance.workers.len()
        )));
    }
    if instance.function.domain.lo < 0.0 {
        return Err(Error::InvalidInstance(
            "load bounds need a nonnegative domain".into(),
        ));
    }
    let extremes = extremes_of(instance)?;
    let u: Vec<f64> = extremes.iter().map(|e| e.u).collect();
    let v: Vec<f64> = extremes.iter().map(|e| e.v).collect();
    let outcome = run_stream(instance, &simultaneous(jobs), PolicyOptions::default())?;
    let (l_m, l_n, l_x) = (job_load(&u), job_load(&v), job_load(jobs));
    let verdict = if (outcome.reward as usize) < jobs.len() {
        LoadVerdict::Vacuous
    } else if l_n <= l_x && l_x <= l_m {
        LoadVerdict::BoundsHold
    } else {
        LoadVerdict::BoundsViolated
    };
    Ok(LoadReport {
        u,
        v,
        l_m,
        l_n,
        l_x,
        reward: outcome.reward,
        verdict,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    /// Centers at `u_i - ε`.
    Upper,
    /// Centers at `v_i + ε`.
    Lower,
}

/// Default shift: a millionth of the domain width.
pub fn default_epsilon(domain: &Domain) -> f64 {
    1e-6 * domain.width()
}

/// Gaussian mixture truncated to the domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureSpec {
    pub centers: Vec<f64>,
    pub weights: Vec<f64>,
    pub sigma: f64,
    pub domain: Domain,
    /// Mass of the untruncated weighted mixture inside the domain.
    pub normalizer: f64,
}

/// Point masses on the shifted extremes with weight `k/n` for a value
/// shared by `k` of the `n` workers, smoothed by Gaussians of width `sigma`.
pub fn build_reward_maximizing_mixture(
    extremes: &[f64],
    side: Side,
    epsilon: f64,
    sigma: f64,
    domain: Domain,
) -> Result<MixtureSpec> {
    if extremes.is_empty() {
        return Err(Error::BadSpec("mixture needs at least one extreme".into()));
    }
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::BadSpec(format!(
            "sigma must be positive, got {sigma}"
        )));
    }
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::BadSpec(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    let mut shifted: Vec<f64> = extremes
        .iter()
        .map(|&e| match side {
            Side::Upper => e - epsilon,
            Side::Lower => e + epsilon,
        })
        .collect();
    shifted.sort_by(f64::total_cmp);

    let n = shifted.len() as f64;
    let mut centers: Vec<f64> = Vec::new();
    let mut counts: Vec<usize> = Vec::new();
    for c in shifted {
        match centers.last() {
            Some(&head) if (c - head).abs() <= MERGE_TOLERANCE => *counts.last_mut().unwrap() += 1,
            _ => {
                centers.push(c);
                counts.push(1);
            }
        }
    }
    for &c in &centers {
        if !(domain.lo < c && c < domain.hi) {
            return Err(Error::BadEpsilon {
                center: c,
                lo: domain.lo,
                hi: domain.hi,
            });
        }
    }
    let weights: Vec<f64> = counts.iter().map(|&k| k as f64 / n).collect();
    let mut spec = MixtureSpec {
        centers,
        weights,
        sigma,
        domain,
        normalizer: 1.0,
    };
    spec.normalizer = spec.integrate_unnormalized();
    if !(spec.normalizer > 0.0) {
        return Err(Error::BadSpec(
            "mixture places no mass inside the domain".into(),
        ));
    }
    Ok(spec)
}

fn gaussian(x: f64, mean: f64, sigma: f64) -> f64 {
    let z = (x - mean) / sigma;
    (-0.5 * z * z).exp() / (sigma * (2.0 * std::f64::consts::PI).sqrt())
}

impl MixtureSpec {
    fn unnormalized(&self, x: f64) -> f64 {
        self.centers
            .iter()
            .zip(&self.weights)
            .map(|(&c, &w)| w * gaussian(x, c, self.sigma))
            .sum()
    }

    /// Density of the truncated mixture (zero outside the domain).
    pub fn density(&self, x: f64) -> f64 {
        if self.domain.contains(x) {
            self.unnormalized(x) / self.normalizer
        } else {
            0.0
        }
    }

    /// Probability that a draw comes from each component.
    pub fn component_probabilities(&self) -> Vec<f64> {
        self.centers
            .iter()
            .zip(&self.weights)
            .map(|(&c, &w)| {
                let single = MixtureSpec {
                    centers: vec![c],
                    weights: vec![w],
                    ..self.clone()
                };
                single.integrate_unnormalized() / self.normalizer
            })
            .collect()
    }

    /// Adaptive Simpson over the domain, split at points spaced in units of
    /// `sigma` around every center so narrow peaks are never stepped over.
    fn integrate_unnormalized(&self) -> f64 {
        const OFFSETS: [f64; 12] = [
            0.0, 0.5, 1.0, 1.5, 2.0, 3.0, 4.0, 6.0, 8.0, 12.0, 18.0, 40.0,
        ];
        let Domain { lo, hi } = self.domain;
        let mut cuts = vec![lo, hi];
        for &c in &self.centers {
            for k in OFFSETS {
                for x in [c - k * self.sigma, c + k * self.sigma] {
                    if lo < x && x < hi {
                        cuts.push(x);
                    }
                }
            }
        }
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        let pieces = cuts.len().saturating_sub(1).max(1) as f64;
        let tol = NORMALIZER_TOLERANCE * 1e-3 / pieces;
        let density = |x: f64| self.unnormalized(x);
        cuts.windows(2)
            .map(|w| adaptive_simpson(&density, w[0], w[1], tol))
            .sum()
    }

    pub fn sampler(&self, seed: u64) -> MixtureSampler {
        MixtureSampler::new(self.clone(), ChaCha8Rng::seed_from_u64(seed))
    }
}

/// Adaptive Simpson quadrature to absolute tolerance `tol`.
pub fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(fa: f64, fm: f64, fb: f64, a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &impl Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = simpson(fa, flm, fm, a, m);
        let right = simpson(fm, frm, fb, m, b);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
                + recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
        }
    }
    if a == b {
        return 0.0;
    }
    let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
    let whole = simpson(fa, fm, fb, a, b);
    recurse(f, a, b, fa, fm, fb, whole, tol, 48)
}

/// Draws from a [`MixtureSpec`]: pick a center by weight, add a Gaussian
/// deviate, redraw until the value lands in the domain.
#[derive(Debug, Clone)]
pub struct MixtureSampler {
    spec: MixtureSpec,
    index: WeightedIndex<f64>,
    rng: ChaCha8Rng,
}

impl MixtureSampler {
    pub fn new(spec: MixtureSpec, rng: ChaCha8Rng) -> Self {
        let index = WeightedIndex::new(&spec.weights).expect("mixture weights are positive");
        MixtureSampler { spec, index, rng }
    }

    pub fn sample(&mut self) -> f64 {
        self.sample_with_component().1
    }

    /// A draw together with the index of the center that produced it.
    pub fn sample_with_component(&mut self) -> (usize, f64) {
        loop {
            let k = self.index.sample(&mut self.rng);
            let z: f64 = StandardNormal.sample(&mut self.rng);
            let x = self.spec.centers[k] + self.spec.sigma * z;
            if self.spec.domain.contains(x) {
                return (k, x);
            }
        }
    }

    pub fn spec(&self) -> &MixtureSpec {
        &self.spec
    }
}

/// Fraction of `trials` independent `n`-job sets, drawn from `mixture`, that
/// the greedy policy serves completely (`n` = number of workers).
pub fn full_service_rate(
    instance: &Instance,
    mixture: &MixtureSpec,
    trials: usize,
    seed: u64,
) -> Result<f64> {
    let n = instance.workers.len();
    let mut sampler = mixture.sampler(seed);
    let mut served = 0usize;
    for _ in 0..trials {
        let jobs: Vec<f64> = (0..n).map(|_| sampler.sample()).collect();
        let outcome = run_stream(instance, &simultaneous(&jobs), PolicyOptions::default())?;
        if outcome.reward as usize == n {
            served += 1;
        }
    }
    Ok(served as f64 / trials.max(1) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::workers_from_rates;
    use proptest::prelude::*;
    use statrs::distribution::{ContinuousCDF, Normal};

    fn first_example() -> Instance {
        Instance::new(
            0.15,
            ThresholdFunction::product(Domain::unit()),
            workers_from_rates(&[0.4, 0.5, 0.6, 0.7]),
        )
        .unwrap()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn loads() {
        assert_eq!(job_load(&[3.0, 4.0]), 5.0);
        assert_eq!(job_load(&[]), 0.0);
        // sqrt(0.140625 + 0.09 + 0.0625 + 0.04592449) = 0.582275...
        assert!(close(job_load(&[0.375, 0.3, 0.25, 0.2143]), 0.58228, 1e-5));
    }

    #[test]
    fn product_extremes() {
        let f = ThresholdFunction::product(Domain::unit());
        let e = feasible_extremes(&f, 0.15, 0.4).unwrap();
        assert_eq!(e.u, 1.0);
        assert!(close(e.v, 0.375, 1e-15));
        assert!(0.4 * e.v >= 0.15);
        assert!(0.4 * e.v.next_down() < 0.15);
    }

    #[test]
    fn ratio_extremes() {
        let f = ThresholdFunction::ratio(Domain::new(0.01, 1.0).unwrap()).unwrap();
        let e = feasible_extremes(&f, 1.0, 0.5).unwrap();
        assert!(close(e.u, 0.5, 1e-15));
        assert_eq!(e.v, 0.01);
    }

    #[test]
    fn infeasible_and_unmonotone() {
        let f = ThresholdFunction::product(Domain::unit());
        assert!(matches!(
            feasible_extremes(&f, 2.0, 0.7),
            Err(Error::Infeasible { .. })
        ));
        let t = ThresholdFunction::tabulated(Default::default(), Domain::unit());
        assert!(matches!(
            feasible_extremes(&t, 0.1, 0.5),
            Err(Error::NotMonotone)
        ));
    }

    #[test]
    fn nonpositive_thresholds_cover_whole_domain() {
        let f = ThresholdFunction::product(Domain::unit());
        assert_eq!(
            feasible_extremes(&f, 0.0, 0.3).unwrap(),
            Extremes { u: 1.0, v: 0.0 }
        );
        let g = ThresholdFunction::ratio(Domain::new(0.2, 0.8).unwrap()).unwrap();
        assert_eq!(
            feasible_extremes(&g, -1.0, 0.3).unwrap(),
            Extremes { u: 0.8, v: 0.2 }
        );
    }

    #[test]
    fn bounds_on_servable_jobs() {
        let report = verify_load_bounds(&first_example(), &[0.5, 0.6, 0.7, 0.8]).unwrap();
        assert_eq!(report.verdict, LoadVerdict::BoundsHold);
        assert!(close(report.l_n, 0.58228, 1e-5));
        assert!(close(report.l_m, 2.0, 1e-15));
    }

    #[test]
    fn bounds_vacuous_when_a_job_is_rejected() {
        let report =
            verify_load_bounds(&first_example(), &[0.0975, 0.275, 0.9575, 0.4854]).unwrap();
        assert_eq!(report.reward, 3);
        assert_eq!(report.verdict, LoadVerdict::Vacuous);
    }

    #[test]
    fn single_worker_bounds() {
        let instance = Instance::new(
            0.5,
            ThresholdFunction::product(Domain::unit()),
            workers_from_rates(&[1.0]),
        )
        .unwrap();
        let report = verify_load_bounds(&instance, &[0.75]).unwrap();
        assert_eq!(report.verdict, LoadVerdict::BoundsHold);
        assert_eq!((report.l_n, report.l_x, report.l_m), (0.5, 0.75, 1.0));
    }

    #[test]
    fn bounds_need_matching_counts() {
        assert!(verify_load_bounds(&first_example(), &[0.5]).is_err());
    }

    #[test]
    fn duplicate_extremes_merge() {
        let m = build_reward_maximizing_mixture(&[1.0; 4], Side::Upper, 1e-6, 1e-4, Domain::unit())
            .unwrap();
        assert_eq!(m.centers, vec![1.0 - 1e-6]);
        assert_eq!(m.weights, vec![1.0]);
    }

    fn closed_form_normalizer(m: &MixtureSpec) -> f64 {
        m.centers
            .iter()
            .zip(&m.weights)
            .map(|(&c, &w)| {
                let n = Normal::new(c, m.sigma).unwrap();
                w * (n.cdf(m.domain.hi) - n.cdf(m.domain.lo))
            })
            .sum()
    }

    #[test]
    fn lower_mixture_normalizer() {
        let m = build_reward_maximizing_mixture(
            &[0.375, 0.3, 0.25, 0.2143],
            Side::Lower,
            1e-6,
            1e-4,
            Domain::unit(),
        )
        .unwrap();
        assert_eq!(m.centers.len(), 4);
        assert!(m.weights.iter().all(|&w| w == 0.25));
        assert!(close(m.normalizer, 1.0, 1e-6));
        let exact = closed_form_normalizer(&m);
        assert!(((m.normalizer - exact) / exact).abs() <= NORMALIZER_TOLERANCE);
    }

    #[test]
    fn truncated_normalizer_matches_closed_form() {
        for sigma in [1e-2, 1e-3, 1e-4, 0.3] {
            let m = build_reward_maximizing_mixture(
                &[1.0, 1.0, 0.5, 0.02],
                Side::Upper,
                1e-6,
                sigma,
                Domain::unit(),
            )
            .unwrap();
            let exact = closed_form_normalizer(&m);
            assert!(
                ((m.normalizer - exact) / exact).abs() <= NORMALIZER_TOLERANCE,
                "sigma {sigma}: {} vs {exact}",
                m.normalizer
            );
        }
    }

    #[test]
    fn center_outside_domain_is_bad_epsilon() {
        assert!(matches!(
            build_reward_maximizing_mixture(&[1.0], Side::Lower, 1e-6, 1e-4, Domain::unit()),
            Err(Error::BadEpsilon { .. })
        ));
        assert!(matches!(
            build_reward_maximizing_mixture(&[0.5], Side::Upper, 0.6, 1e-4, Domain::unit()),
            Err(Error::BadEpsilon { .. })
        ));
    }

    #[test]
    fn sampler_frequencies_match_component_masses() {
        let m = build_reward_maximizing_mixture(
            &[0.375, 0.3, 0.25, 0.2143],
            Side::Lower,
            1e-6,
            1e-4,
            Domain::unit(),
        )
        .unwrap();
        let probs = m.component_probabilities();
        let draws = 100_000;
        let mut counts = vec![0usize; m.centers.len()];
        let mut sampler = m.sampler(2024);
        for _ in 0..draws {
            let (k, x) = sampler.sample_with_component();
            assert!(m.domain.contains(x));
            counts[k] += 1;
        }
        for (count, p) in counts.iter().zip(&probs) {
            let freq = *count as f64 / draws as f64;
            let band = 3.0 * (p * (1.0 - p) / draws as f64).sqrt();
            assert!((freq - p).abs() <= band, "{freq} vs {p} ± {band}");
        }
    }

    #[test]
    fn density_integrates_to_one() {
        let m =
            build_reward_maximizing_mixture(&[0.6, 0.9], Side::Upper, 1e-3, 0.05, Domain::unit())
                .unwrap();
        let total = adaptive_simpson(&|x| m.density(x), 0.0, 1.0, 1e-12);
        assert!(close(total, 1.0, 1e-9));
        assert_eq!(m.density(1.5), 0.0);
    }

    #[test]
    fn upper_mixture_serves_first_example() {
        let instance = first_example();
        let u: Vec<f64> = extremes_of(&instance)
            .unwrap()
            .iter()
            .map(|e| e.u)
            .collect();
        let m =
            build_reward_maximizing_mixture(&u, Side::Upper, 1e-6, 1e-4, Domain::unit()).unwrap();
        assert_eq!(full_service_rate(&instance, &m, 200, 5).unwrap(), 1.0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn bisection_agrees_with_inversion(
            p in 0.01f64..=1.0,
            alpha in 0.0f64..=1.0,
            ratio in any::<bool>(),
        ) {
            let f = if ratio {
                ThresholdFunction::ratio(Domain::new(0.01, 1.0).unwrap()).unwrap()
            } else {
                ThresholdFunction::product(Domain::unit())
            };
            let (closed, bisected) = (closed_form_extremes(&f, alpha, p), bisect_extremes(&f, alpha, p));
            match (closed, bisected) {
                (Ok(c), Ok(b)) => {
                    prop_assert!((c.u - b.u).abs() <= EXTREME_AGREEMENT);
                    prop_assert!((c.v - b.v).abs() <= EXTREME_AGREEMENT);
                }
                (Err(Error::Infeasible { .. }), Err(Error::Infeasible { .. })) => {}
                (c, b) => prop_assert!(false, "{c:?} vs {b:?}"),
            }
        }

        #[test]
        fn mixture_weights_sum_to_one(
            extremes in prop::collection::vec(0.1f64..0.9, 1..30),
            dup in 0usize..5,
        ) {
            let mut values = extremes.clone();
            values.extend(std::iter::repeat_n(extremes[0], dup));
            let m = build_reward_maximizing_mixture(&values, Side::Upper, 1e-6, 1e-3, Domain::unit()).unwrap();
            prop_assert!((m.weights.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        }
    }
}
