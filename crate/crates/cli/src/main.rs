mod config;
mod manifest;
mod pipelines;
mod plot;

use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

/// Experiment driver: simulation, deterministic solves, convergence and
/// stability studies, assumption checks, and transport self-tests.
#[derive(Parser)]
#[command(name = "mckv", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the interacting particle system and persist snapshots
    Simulate(RunArgs),
    /// Solve the deterministic density equation on a grid
    FpSolve(RunArgs),
    /// Mollifier-index convergence study
    Converge(RunArgs),
    /// Initial-law stability experiment
    Stability(RunArgs),
    /// Sampled verification of the declared coefficient conditions
    CheckAssumptions(RunArgs),
    /// Internal consistency suite for the transport module
    TransportSelftest(RunArgs),
    /// Emit tidy plot data from a finished run directory
    PlotData(PlotArgs),
}

#[derive(clap::Args)]
struct RunArgs {
    /// experiment config file (TOML)
    #[arg(long)]
    config: PathBuf,
    /// override the output directory
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// worker threads (default: all cores)
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(clap::Args)]
struct PlotArgs {
    /// finished run directory containing manifest.json
    #[arg(long)]
    run_dir: PathBuf,
    /// one of: density-evolution, holder-fit, convergence, stability-ratio
    #[arg(long)]
    kind: String,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (name, args) = match &cli.command {
        Command::Simulate(a) => ("simulate", a),
        Command::FpSolve(a) => ("fp-solve", a),
        Command::Converge(a) => ("converge", a),
        Command::Stability(a) => ("stability", a),
        Command::CheckAssumptions(a) => ("check-assumptions", a),
        Command::TransportSelftest(a) => ("transport-selftest", a),
        Command::PlotData(p) => {
            return match plot::emit_plot_data(&p.run_dir, &p.kind) {
                Ok(files) => {
                    for f in files {
                        println!("{}", f.display());
                    }
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("{}", e.to_error_json());
                    ExitCode::from(e.exit_code())
                }
            };
        }
    };
    if let Some(k) = args.threads {
        // a failed build means a pool already exists (e.g. in tests); fine
        let _ = rayon::ThreadPoolBuilder::new().num_threads(k).build_global();
    }
    match pipelines::run(name, &args.config, args.output_dir.as_deref()) {
        Ok(outcome) => {
            println!("{}", outcome.summary);
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", e.to_error_json());
            ExitCode::from(e.exit_code())
        }
    }
}
