//! A tabulated function whose worker ranking flips between jobs. The policy
//! refuses it unless forced, and the forced run loses one unit to the
//! offline optimum.

use sstap::function::{check_order_preserving, OrderVerdict, Table};
use sstap::model::workers_from_rates;
use sstap::policy::simultaneous;
use sstap::{oracle, run_stream, Domain, Instance, Job, PolicyOptions, ThresholdFunction};

fn main() -> sstap::Result<()> {
    let table = Table::from_rows(&[&[0.5, 0.4, 0.7], &[0.08, 0.1, 0.03], &[0.5, 0.4, 0.1]]);
    let f = ThresholdFunction::tabulated(table, Domain::unit());
    let workers = workers_from_rates(&[0.3, 0.5, 0.7]);
    let jobs: Vec<Job> = (1..=3).map(|i| Job::new(i, 0.0)).collect();

    if let OrderVerdict::Violation(w) = check_order_preserving(&f, &jobs, &workers)? {
        println!("not order-preserving: {w}");
    }

    let instance = Instance::new(0.1, f.clone(), workers.clone())?;
    let arrivals = simultaneous(&[0.0; 3]);
    match run_stream(&instance, &arrivals, PolicyOptions::default()) {
        Err(e) => println!("default run refused: {e}"),
        Ok(_) => unreachable!("the table is not order-preserving"),
    }
    let forced = run_stream(&instance, &arrivals, PolicyOptions::forced())?;
    for r in &forced.records {
        match r.worker() {
            Some(w) => println!("{} -> {w}", r.job),
            None => println!("{} rejected", r.job),
        }
    }
    let best = oracle::offline_optimum_exhaustive(&jobs, &workers, &f, 0.1)?;
    println!(
        "forced greedy reward {}, offline optimum {best}",
        forced.reward
    );
    Ok(())
}
