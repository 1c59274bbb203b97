//! Command-line scenario runner.

use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;
use stsfg::config::Kind;
use stsfg::scenario::{run_scenario, validate_only};

#[derive(Debug, Parser)]
#[command(name = "stsfg", version, about = "Spatio-temporal mode-selective sum-frequency conversion simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Scenario config file (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory for report.json and CSVs.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Override the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Promote accuracy warnings (e.g. window clipping) to errors.
    #[arg(long)]
    strict: bool,
    /// Cap on worker threads; 0 means all cores.
    #[arg(long, default_value_t = 0)]
    jobs: usize,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Propagate one signal/pump pair and export the SF field.
    Simulate(RunArgs),
    /// Optimize the pump superposition for a target signal mode.
    Optimize(RunArgs),
    /// Measure the full signal × pump crosstalk matrix.
    Tomography(RunArgs),
    /// Sweep rotated HG masks on signal and pump.
    Rotate(RunArgs),
    /// Parse and validate a config without running it.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

fn run(args: &RunArgs, kind: Kind) -> stsfg::Result<()> {
    if args.jobs > 0 {
        // Build the global pool up front; later implicit pools would ignore
        // the cap.
        rayon::ThreadPoolBuilder::new()
            .num_threads(args.jobs)
            .build_global()
            .map_err(|e| stsfg::Error::Config(format!("--jobs: {e}")))?;
    }
    let report = run_scenario(&args.config, &args.out, Some(kind), args.seed, args.strict)?;
    println!(
        "ok: {:?} scenario, {} output file(s) in {}",
        report.kind,
        report.outputs.len(),
        args.out.display()
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Simulate(args) => run(args, Kind::Simulate),
        Command::Optimize(args) => run(args, Kind::Optimize),
        Command::Tomography(args) => run(args, Kind::Tomography),
        Command::Rotate(args) => run(args, Kind::Rotate),
        Command::Validate { config } => validate_only(config).map(|kind| {
            println!("ok: valid {kind:?} config");
        }),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
