//! Command-line front end for `zeno_tomo`.
//!
//! Every table goes to standard output as CSV with a header row; per-point
//! failures are listed on standard error and turn the exit code nonzero.

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

pub mod commands;
pub mod format;
pub mod model;

#[derive(Debug, Parser)]
#[command(
    name = "zeno-tomo",
    version,
    about = "Quantum Zeno absorption tomography"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Channel probabilities, effective transmission and regime per (L, tau).
    Probs(ProbsArgs),
    /// Absorbed-particle ratio between Zeno and standard setups at fixed error.
    Ratio(RatioArgs),
    /// Cramer-Rao bounds of both setups and their per-absorbed equivalence.
    Crlb(CrlbArgs),
    /// Decision levels and lines between two gray levels.
    Rules(RulesArgs),
    /// Monte Carlo reconstruction of a sample.
    Simulate(SimulateArgs),
    /// Write the synthetic stand-in sample and its model file.
    Sample(SampleArgs),
}

#[derive(Debug, Args)]
pub struct ProbsArgs {
    #[arg(long, value_delimiter = ',', default_values_t = [10, 165, 2000, 12000])]
    pub loops: Vec<u32>,
    #[arg(long, value_delimiter = ',', default_values_t = [0.8, 0.9, 0.96, 0.98, 0.99, 1.0])]
    pub tau: Vec<f64>,
}

#[derive(Debug, Args)]
pub struct RatioArgs {
    /// Darker gray level of each pair.
    #[arg(long, value_delimiter = ',', default_values_t = [0.8, 0.9, 0.95, 0.97])]
    pub tau: Vec<f64>,
    /// Gap to the lighter level.
    #[arg(long, default_value_t = 0.02)]
    pub dtau: f64,
    #[arg(long, default_value_t = 2000)]
    pub loops: u32,
    /// Error probability both setups must reach.
    #[arg(long = "target-pe", default_value_t = 0.005)]
    pub target_pe: f64,
    /// Prior of the darker level; defaults to 0.01, 0.02, ..., 0.97.
    #[arg(long, value_delimiter = ',')]
    pub alpha: Vec<f64>,
    /// Use the leading-order Zeno absorption law instead of the matrix power.
    #[arg(long)]
    pub asymptotic: bool,
}

#[derive(Debug, Args)]
pub struct CrlbArgs {
    #[arg(long, value_delimiter = ',', default_values_t = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9])]
    pub tau: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_values_t = [10000])]
    pub loops: Vec<u32>,
    #[arg(long, default_value_t = 1000)]
    pub particles: u64,
}

#[derive(Debug, Args)]
#[command(group = clap::ArgGroup::new("budget").args(["particles", "target_pe"]))]
pub struct RulesArgs {
    /// The two transmission amplitudes, darker first.
    #[arg(long, value_delimiter = ',', num_args = 1.., default_values_t = [0.96, 0.99])]
    pub tau: Vec<f64>,
    /// Prior of the darker level.
    #[arg(long, default_value_t = 0.5)]
    pub alpha: f64,
    #[arg(long, value_delimiter = ',', default_values_t = [10, 165, 2000])]
    pub loops: Vec<u32>,
    #[arg(long)]
    pub particles: Option<u64>,
    /// Choose per setup the smallest N whose binomial error reaches this.
    #[arg(long = "target-pe")]
    pub target_pe: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SetupKind {
    Standard,
    Zeno,
}

#[derive(Debug, Args)]
#[command(group = clap::ArgGroup::new("budget").args(["particles", "absorbed"]))]
pub struct SimulateArgs {
    /// Binary graymap of the sample; the built-in synthetic cell if absent.
    #[arg(long, requires = "model")]
    pub input: Option<PathBuf>,
    /// Model file mapping pixel ranges to gray levels.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Take priors from level frequencies in the image.
    #[arg(long)]
    pub measured_alpha: bool,
    #[arg(long, default_value = "out")]
    pub outdir: PathBuf,
    #[arg(long, value_enum, value_delimiter = ',', default_values = ["standard", "zeno"])]
    pub setup: Vec<SetupKind>,
    /// Loop counts for the Zeno setup.
    #[arg(long, value_delimiter = ',', default_values_t = [10, 165])]
    pub loops: Vec<u32>,
    /// Particles per pixel.
    #[arg(long, value_delimiter = ',')]
    pub particles: Vec<u64>,
    /// Mean absorbed particles per pixel; N is derived per setup.
    /// Defaults to 1.7, 2.3, 4, 13.
    #[arg(long, value_delimiter = ',')]
    pub absorbed: Vec<f64>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[arg(long, default_value = "data")]
    pub outdir: PathBuf,
    #[arg(long, default_value_t = 100)]
    pub width: usize,
    #[arg(long, default_value_t = 100)]
    pub height: usize,
}

/// Runs one command. Returns the number of failed grid points; hard errors
/// abort with `Err`.
pub fn run(cli: &Cli, out: &mut dyn Write, diag: &mut dyn Write) -> anyhow::Result<usize> {
    match &cli.command {
        Command::Probs(args) => commands::probs(args, out, diag),
        Command::Ratio(args) => commands::ratio(args, out, diag),
        Command::Crlb(args) => commands::crlb(args, out, diag),
        Command::Rules(args) => commands::rules(args, out, diag),
        Command::Simulate(args) => commands::simulate(args, out, diag),
        Command::Sample(args) => commands::sample(args, out),
    }
}
