//! Command-line front end: closed-form bound tables, minimum-energy reports,
//! figure-preset curves, plan simulation, and mixing diagnostics, emitted as
//! CSV (and optionally a minimal SVG chart).
//!
//! Exit codes: 0 on success, 2 for configuration errors, 3 when an
//! optimization reports infeasibility, 4 when a `--check` assertion fails.

mod commands;
mod output;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "jscc",
    about = "Energy-limited universal joint source-channel coding toolkit",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form distortion bounds over an ENR grid (CSV).
    Bounds(commands::BoundsArgs),
    /// Minimum-energy report for a polynomial distortion profile.
    MinEnergy(commands::MinEnergyArgs),
    /// Reproduce a named curve preset (CSV, optional SVG).
    Figure(commands::FigureArgs),
    /// Monte Carlo simulation of a plan file over a noise grid (CSV).
    Simulate(commands::SimulateArgs),
    /// Walsh-Hadamard mixing diagnostic table (CSV).
    Gaussianize(commands::GaussianizeArgs),
}

fn main() {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Bounds(args) => commands::run_bounds(args),
        Command::MinEnergy(args) => commands::run_min_energy(args),
        Command::Figure(args) => commands::run_figure(args),
        Command::Simulate(args) => commands::run_simulate(args),
        Command::Gaussianize(args) => commands::run_gaussianize(args),
    };
    match outcome {
        Ok(()) => {}
        Err(err) => {
            eprintln!("error: {err}");
            std::process::exit(err.exit_code());
        }
    }
}
