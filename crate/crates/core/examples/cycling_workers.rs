//! An open-ended stream of jobs served by workers that come back after a
//! delay set by their cycle rate. One worker never returns.

use rand::Rng;
use sstap::model::Worker;
use sstap::policy::{Arrival, ReturnDelay};
use sstap::{run_stream, Domain, Instance, PolicyOptions, ThresholdFunction};

fn main() -> sstap::Result<()> {
    let workers = vec![
        Worker::cycling(1, 0.3, 2.0),
        Worker::cycling(2, 0.6, 1.0),
        Worker::new(3, 0.9),
    ];
    let instance =
        Instance::new(0.2, ThresholdFunction::product(Domain::unit()), workers)?.with_seed(7);

    let mut rng = sstap::rng::stream(7, 0, 0);
    let jobs: Vec<Arrival> = (0..40)
        .map(|k| Arrival {
            value: rng.random::<f64>(),
            time: 0.25 * k as f64,
        })
        .collect();

    for delay in [ReturnDelay::Deterministic, ReturnDelay::Exponential] {
        let options = PolicyOptions {
            return_delay: delay,
            ..PolicyOptions::default()
        };
        let outcome = run_stream(&instance, &jobs, options)?;
        let per_worker: Vec<usize> = (1..=3)
            .map(|id| {
                outcome
                    .records
                    .iter()
                    .filter(|r| r.worker().is_some_and(|w| w.0 == id))
                    .count()
            })
            .collect();
        println!(
            "{delay:?}: served {} of {} jobs, per worker {per_worker:?}",
            outcome.reward,
            jobs.len()
        );
    }
    Ok(())
}
