use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use triality_cli::{run, Command, Config, Options};

/// Radial Riccati / HJB / linear triality solver.
#[derive(Parser)]
#[command(name = "triality", version)]
struct Cli {
    #[command(subcommand)]
    command: Option<Cmd>,

    /// Run configuration (JSON); a previous report.json is accepted too
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,

    /// Print the default configuration and exit
    #[arg(long, global = true)]
    print_defaults: bool,
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve on [0, R] and write solution.csv and report.json
    Solve,
    /// Tabulate the noise limits over a list of sigmas
    SweepSigma {
        /// Comma-separated noise levels, overriding sweep.sigmas
        #[arg(long, value_delimiter = ',')]
        sigmas: Option<Vec<f64>>,
    },
    /// Compare the integrator with the Kummer series of the quadratic cost
    BenchmarkKummer,
    /// Simulate the feedback law and check the martingale property
    Montecarlo {
        /// Simulation settings (the montecarlo block on its own)
        #[arg(long)]
        sim: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.print_defaults {
        let text = serde_json::to_string_pretty(&Config::default()).expect("defaults serialize");
        println!("{text}");
        return ExitCode::SUCCESS;
    }
    let Some(cmd) = cli.command else {
        eprintln!("triality: a subcommand is required (solve, sweep-sigma, benchmark-kummer, montecarlo)");
        return ExitCode::from(2);
    };
    let mut opts = Options {
        config: cli.config,
        out: cli.out,
        ..Options::default()
    };
    let command = match cmd {
        Cmd::Solve => Command::Solve,
        Cmd::SweepSigma { sigmas } => {
            opts.sigmas = sigmas;
            Command::SweepSigma
        }
        Cmd::BenchmarkKummer => Command::BenchmarkKummer,
        Cmd::Montecarlo { sim } => {
            opts.sim = sim;
            Command::MonteCarlo
        }
    };
    ExitCode::from(run(command, &opts) as u8)
}
