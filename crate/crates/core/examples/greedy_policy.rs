//! Four jobs, four workers, product threshold `x·p >= 0.15`. Each job goes
//! to the feasible worker with the smallest `x·p`; the first job fits nobody.

use sstap::model::workers_from_rates;
use sstap::oracle;
use sstap::{Domain, Instance, Job, PolicyOptions, PolicyState, ThresholdFunction};

fn main() -> sstap::Result<()> {
    let f = ThresholdFunction::product(Domain::unit());
    let instance = Instance::new(0.15, f.clone(), workers_from_rates(&[0.4, 0.5, 0.6, 0.7]))?;
    let values = [0.0975, 0.275, 0.9575, 0.4854];

    let mut state = PolicyState::new(instance.clone(), PolicyOptions::default())?;
    for &x in &values {
        let record = state.assign_next(x, 0.0)?;
        match record.worker() {
            Some(w) => println!("{} (x = {x}) -> {w}", record.job),
            None => println!("{} (x = {x}) rejected", record.job),
        }
    }
    let reward = sstap::model::compute_reward(state.log())?;

    let jobs: Vec<Job> = values
        .iter()
        .enumerate()
        .map(|(i, &x)| Job::new(i + 1, x))
        .collect();
    let best = oracle::offline_optimum(&jobs, &instance.workers, &f, instance.alpha)?;
    println!("reward {reward}, offline optimum {best}");
    Ok(())
}
