//! Worker rates drawn at random. With i.i.d. jobs the expected reward is
//! the same for every assignment; with job-specific distributions the best
//! assignment is a maximum-weight matching on success probabilities.

use sstap::dsstap::{self, DistributionSpec, MonteCarlo};
use sstap::{Domain, ThresholdFunction};

fn main() -> sstap::Result<()> {
    let f = ThresholdFunction::product(Domain::unit());
    let jobs = DistributionSpec::Uniform { a: 0.0, b: 1.0 };
    let rates: Vec<DistributionSpec> = [0.4, 0.5, 0.6, 0.7]
        .iter()
        .map(|&c| DistributionSpec::PointMass { c })
        .collect();
    let est = dsstap::expected_reward_case1(&jobs, &rates, &f, 0.15, MonteCarlo::new(100_000, 0))?;
    println!("i.i.d. jobs: expected reward {:.4}", est.value);

    let mut rng = sstap::rng::stream(1, 0, 0);
    for _ in 0..2 {
        let order = dsstap::random_order(rates.len(), &mut rng);
        let sim = dsstap::simulate_fixed_assignment(&jobs, &rates, &f, 0.15, &order, 50_000, 2)?;
        println!("  order {order:?}: {:.4} ± {:.4}", sim.value, sim.std_error);
    }

    let job_specific = vec![
        DistributionSpec::PointMass { c: 0.8 },
        DistributionSpec::PointMass { c: 0.3 },
        DistributionSpec::Uniform { a: 0.2, b: 0.9 },
    ];
    let worker_rates = vec![
        DistributionSpec::Uniform { a: 0.2, b: 0.6 },
        DistributionSpec::Uniform { a: 0.0, b: 1.0 },
        DistributionSpec::Empirical {
            samples: vec![0.35, 0.55, 0.95],
        },
    ];
    let matrix = dsstap::estimate_prob_matrix(
        &job_specific,
        &worker_rates,
        &f,
        0.24,
        MonteCarlo::new(100_000, 3),
    )?;
    print!("{}", matrix.to_csv());
    let best = dsstap::hungarian_max(&matrix);
    println!(
        "best assignment {:?}, expected reward {:.4}",
        best.permutation, best.total
    );
    Ok(())
}
