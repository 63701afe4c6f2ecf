//! Threshold sweep with the ratio function `p/x`: 200 workers with rates
//! `i/200`, uniform jobs, mean and spread of jobs served per threshold.
//!
//! `cargo run --release --example figure1 -- [trials] [seed]`

use sstap::cli::{figure1_csv, run_figure1, Figure1Config};

fn main() -> sstap::Result<()> {
    let mut args = std::env::args().skip(1);
    let trials = args.next().map_or(500, |s| s.parse().expect("trials"));
    let seed = args.next().map_or(2024, |s| s.parse().expect("seed"));
    let settings = Figure1Config {
        trials,
        ..Figure1Config::default()
    };
    print!("{}", figure1_csv(&run_figure1(&settings, seed)?));
    Ok(())
}
