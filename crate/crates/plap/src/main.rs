use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use plap::app::{self, Options};
use plap::config::ExperimentKind;

/// Weighted parabolic p-Laplacian experiments.
#[derive(Parser, Debug)]
#[command(name = "plap", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides `io.out_dir`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed for random initial data (overrides `seed`).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Reject dimension 1.
    #[arg(long, global = true)]
    strict_paper: bool,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Check the coefficient hypotheses and the grid.
    Validate,
    /// Evolve one initial field, writing the ledger and snapshots.
    Simulate,
    /// Contraction of seeded pairs of trajectories.
    Contract,
    /// Entry into the absorbing ball.
    Absorb,
    /// Ensemble diameter shrinkage.
    Compact,
    /// Post-burn-in snapshots.
    Attractor,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let Some(config) = cli.config else {
        eprintln!("error: --config <PATH> is required");
        return ExitCode::from(2);
    };
    let kind = match cli.command {
        Command::Validate => ExperimentKind::Validate,
        Command::Simulate => ExperimentKind::Simulate,
        Command::Contract => ExperimentKind::Contract,
        Command::Absorb => ExperimentKind::Absorb,
        Command::Compact => ExperimentKind::Compact,
        Command::Attractor => ExperimentKind::Attractor,
    };
    let opts = Options {
        config,
        out: cli.out,
        seed: cli.seed,
        strict_paper: cli.strict_paper,
    };
    match app::run(kind, &opts) {
        Ok(outcome) => {
            for line in &outcome.lines {
                println!("{line}");
            }
            ExitCode::from(outcome.exit_code())
        }
        Err(failure) => {
            eprintln!("{failure}");
            ExitCode::from(failure.exit_code())
        }
    }
}
