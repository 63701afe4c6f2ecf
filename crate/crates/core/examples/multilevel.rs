//! Two prioritized worker pools. A job tries level 1 first and falls
//! through to level 2 only if level 1 rejects it. Pooling every worker can
//! only help.

use sstap::model::{workers_from_rates, Worker};
use sstap::multilevel::{compare_flat, run_multilevel, split_by_fractions, LevelSpec};
use sstap::policy::simultaneous;
use sstap::{Domain, PolicyOptions, ThresholdFunction};

fn main() -> sstap::Result<()> {
    let f = ThresholdFunction::product(Domain::unit());
    let levels = vec![
        LevelSpec {
            workers: vec![Worker::new(1, 0.9)],
            alpha: 0.42,
            function: f.clone(),
        },
        LevelSpec {
            workers: vec![Worker::new(2, 0.5)],
            alpha: 0.42,
            function: f.clone(),
        },
    ];
    let jobs = simultaneous(&[0.85, 0.5]);
    let out = run_multilevel(&levels, &jobs, PolicyOptions::default(), 0)?;
    println!("level rewards {:?}, total {}", out.rewards, out.total);
    let cmp = compare_flat(&levels, &jobs, PolicyOptions::default(), 0)?;
    println!("leveled {} vs flat {}", cmp.leveled, cmp.flat);

    // A 70/20/10 split of eleven workers, least capable first.
    let rates: Vec<f64> = (1..=11).map(|i| i as f64 / 11.0).collect();
    let split = split_by_fractions(&workers_from_rates(&rates), &f, 1.0, &[0.7, 0.2, 0.1])?;
    for (k, level) in split.iter().enumerate() {
        let ids: Vec<String> = level.iter().map(|w| w.id.to_string()).collect();
        println!("level {}: {}", k + 1, ids.join(" "));
    }
    Ok(())
}
