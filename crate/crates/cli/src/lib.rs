//! Command-line front end for `collapse-core`.
//!
//! Subcommands:
//!
//! - `simulate`: two-level trajectory ensemble, written as CSV next to the
//!   closed-form coherence.
//! - `predict`: collapse time of a substructure hypothesis read from a
//!   structure file.
//! - `sweep`: `t_c` against ΔE on a logarithmic grid.
//! - `kaon`: the long-lived neutral kaon worked example.
//!
//! Exit codes: 0 success, 1 usage, 2 validation, 3 numeric failure.

pub mod commands;
pub mod error;
pub mod formats;
pub mod manifest;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

pub use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "collapse", version, about = "Energy-driven wavefunction collapse laboratory")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a two-level trajectory ensemble and write mean density matrices as CSV.
    Simulate(SimulateArgs),
    /// Predict the collapse time of a two-branch structure file.
    Predict(PredictArgs),
    /// Tabulate the collapse time over a logarithmic range of energy differences.
    Sweep(SweepArgs),
    /// Reproduce the neutral-kaon collapse-time estimate.
    Kaon(KaonArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PhaseArg {
    Schrodinger,
    Interaction,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    /// Level splitting ΔE in MeV (dimensionless units with --dimensionless).
    #[arg(long, allow_negative_numbers = true)]
    pub delta_e: f64,
    /// Initial population of the lower level.
    #[arg(long)]
    pub alpha: f64,
    #[arg(long)]
    pub trajectories: usize,
    /// Step size in seconds.
    #[arg(long)]
    pub dt: f64,
    #[arg(long)]
    pub t_max: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub k: f64,
    #[arg(long)]
    pub out: PathBuf,
    /// Use ħ = E_p = 1.
    #[arg(long)]
    pub dimensionless: bool,
    #[arg(long, default_value_t = 10)]
    pub record_stride: usize,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Override the default (phases kept only in dimensionless mode).
    #[arg(long, value_enum)]
    pub phase: Option<PhaseArg>,
    #[arg(long)]
    pub collapse_threshold: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub structure: PathBuf,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub k: f64,
    /// Mass table replacing the built-in quark masses.
    #[arg(long)]
    pub masses: Option<PathBuf>,
    /// Measured timescale in seconds to compare against.
    #[arg(long, allow_negative_numbers = true)]
    pub measured: Option<f64>,
    /// Also write the report to this file (with a manifest).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub delta_e_min: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub delta_e_max: f64,
    #[arg(long)]
    pub points: usize,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub k: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct KaonArgs {
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub k: f64,
    #[arg(long)]
    pub masses: Option<PathBuf>,
    #[arg(long, allow_negative_numbers = true)]
    pub measured: Option<f64>,
    /// Write the JSON report to this file (with a manifest).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write the constructed superposition as a structure file.
    #[arg(long)]
    pub structure_out: Option<PathBuf>,
}

/// Parses `args` (including the program name) and runs the command.
/// Human-readable and JSON output goes to `stdout`, diagnostics to
/// `stderr`. Returns the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{}", e.render());
                    0
                }
                _ => {
                    let _ = write!(stderr, "{}", e.render());
                    CliError::Usage(e.to_string()).exit_code()
                }
            };
        }
    };
    match commands::dispatch(&cli.command, stdout) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}
