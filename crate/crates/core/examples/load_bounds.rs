//! Feasible extremes of each worker, the job-load bounds they imply for a
//! fully served job set, and Gaussian mixtures that concentrate jobs just
//! inside the upper extremes.

use sstap::analysis::{self, Side};
use sstap::model::workers_from_rates;
use sstap::{Domain, Instance, ThresholdFunction};

fn main() -> sstap::Result<()> {
    let instance = Instance::new(
        0.15,
        ThresholdFunction::product(Domain::unit()),
        workers_from_rates(&[0.4, 0.5, 0.6, 0.7]),
    )?;
    for (w, e) in instance
        .workers
        .iter()
        .zip(analysis::extremes_of(&instance)?)
    {
        println!("{}: feasible job values [{}, {}]", w.id, e.v, e.u);
    }

    let report = analysis::verify_load_bounds(&instance, &[0.5, 0.4, 0.9, 0.3])?;
    println!(
        "l(N) = {:.5} <= l(X) = {:.5} <= l(M) = {:.5}: {:?}",
        report.l_n, report.l_x, report.l_m, report.verdict
    );

    let upper: Vec<f64> = report.u.clone();
    for sigma in [1e-1, 1e-2, 1e-3, 1e-4] {
        let mixture = analysis::build_reward_maximizing_mixture(
            &upper,
            Side::Upper,
            1e-6,
            sigma,
            Domain::unit(),
        )?;
        let rate = analysis::full_service_rate(&instance, &mixture, 1000, 1)?;
        println!(
            "sigma {sigma:e}: all jobs served in {:.1}% of draws",
            100.0 * rate
        );
    }
    Ok(())
}
