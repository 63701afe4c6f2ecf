use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use sstap::cli::{self, Mode, Overrides, RunConfig};

/// Run a threshold-assignment experiment from a JSON config.
#[derive(Parser)]
#[command(version)]
struct Args {
    #[arg(long)]
    config: PathBuf,
    #[arg(long, value_enum)]
    mode: Option<Mode>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for report.json and CSV tables.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    trials: Option<usize>,
    /// Keep going when the threshold function is not order-preserving.
    #[arg(long)]
    force_non_order_preserving: bool,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let overrides = Overrides {
        mode: args.mode,
        seed: args.seed,
        out: args.out,
        trials: args.trials,
        force_non_order_preserving: args.force_non_order_preserving,
    };
    match RunConfig::load(&args.config).and_then(|c| cli::run(c, &overrides)) {
        Ok((dir, _)) => {
            println!("{}", dir.join("report.json").display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(cli::exit_code(&e) as u8)
        }
    }
}
