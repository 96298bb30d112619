//! `fockchip`: drive the two-qubit photonic chip simulator from the
//! command line. See the subcommand help for details.

mod cmd_calibrate;
mod cmd_gate;
mod cmd_hom;
mod cmd_simulate;
mod cmd_sweep;
mod config;
mod util;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::RunConfig;

#[derive(Parser)]
#[command(
    name = "fockchip",
    about = "Simulate a six-waveguide reconfigurable two-qubit photonic chip",
    version
)]
struct Cli {
    /// JSON file with default values for eta/seed/pairs/points/format.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Extract the post-selected logical gate at one phase setting.
    Gate(cmd_gate::GateArgs),
    /// Phase-sweep probability tables, theory and optionally Monte-Carlo.
    Sweep(cmd_sweep::SweepArgs),
    /// Two-photon dip scans: synthesize, simulate counts and fit.
    Hom(cmd_hom::HomArgs),
    /// Fit the phase-voltage relation from fringe samples.
    Calibrate(cmd_calibrate::CalibrateArgs),
    /// Generate a raw time-tag stream and count coincidences.
    Simulate(cmd_simulate::SimulateArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let config = match RunConfig::load(cli.config.as_deref()) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {}", e.message());
            return ExitCode::from(e.exit_code());
        }
    };
    let result = match cli.command {
        Command::Gate(args) => cmd_gate::run(args, &config),
        Command::Sweep(args) => cmd_sweep::run(args, &config),
        Command::Hom(args) => cmd_hom::run(args, &config),
        Command::Calibrate(args) => cmd_calibrate::run(args, &config),
        Command::Simulate(args) => cmd_simulate::run(args, &config),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.exit_code())
        }
    }
}
