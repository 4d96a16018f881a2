use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use qubit_purification::analytic::DensityKind;
use qubit_purification::integrator::{Backend, BoundaryPolicy};

/// Output directory used when `--out` is not given and the variable is unset.
pub const DEFAULT_OUT_DIR: &str = "out";
pub const OUT_DIR_ENV: &str = "QPURIFY_OUT_DIR";

#[derive(Debug, Parser)]
#[command(
    name = "qpurify",
    version,
    about = "Purification of a continuously monitored qubit"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a trajectory ensemble and write one sample file per snapshot.
    Simulate(SimulateArgs),
    /// Evaluate an exact density on a grid.
    Density(DensityArgs),
    /// Compare a sample file against an exact density.
    Compare(CompareArgs),
    /// Check the Fokker-Planck equation on a (Q, t) grid.
    FpCheck(FpCheckArgs),
    /// Stationary points of the action against ηt.
    Roots(RootsArgs),
    /// Mean purity against time, optionally joined with simulated samples.
    MeanPurity(MeanPurityArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// TOML file with simulation parameters; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long)]
    pub dt: Option<f64>,
    /// Number of time steps; defaults to the last snapshot.
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub traj: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// langevin_q, langevin_Q or collisional.
    #[arg(long)]
    pub backend: Option<Backend>,
    /// Snapshot times t, comma separated.
    #[arg(
        long,
        value_delimiter = ',',
        allow_hyphen_values = true,
        conflicts_with = "snapshots_etat"
    )]
    pub snapshots: Option<Vec<f64>>,
    /// Snapshot times in units of 1/η, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub snapshots_etat: Option<Vec<f64>>,
    /// record_only or clamp.
    #[arg(long)]
    pub boundary: Option<BoundaryPolicy>,
    #[arg(long, allow_hyphen_values = true)]
    pub initial_q: Option<f64>,
    /// Worker threads; results do not depend on this.
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long, env = OUT_DIR_ENV, default_value = DEFAULT_OUT_DIR)]
    pub out: PathBuf,
}

/// A single time, given either as `t` or as `ηt`.
#[derive(Debug, Clone, Args)]
#[group(required = true, multiple = false)]
pub struct TimeArg {
    #[arg(long, allow_hyphen_values = true)]
    pub t: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub etat: Option<f64>,
}

/// A list of times, as `t` values, `ηt` values, or an `ηt` grid `a:b:n`.
#[derive(Debug, Clone, Args)]
#[group(multiple = false)]
pub struct TimesArg {
    #[arg(long = "t", value_delimiter = ',', allow_hyphen_values = true)]
    pub t: Option<Vec<f64>>,
    #[arg(long = "etat", value_delimiter = ',', allow_hyphen_values = true)]
    pub etat: Option<Vec<f64>>,
    #[arg(long = "etat-grid", allow_hyphen_values = true)]
    pub etat_grid: Option<String>,
}

#[derive(Debug, Args)]
pub struct DensityArgs {
    /// P_Q, P_Omega, P_q or P_tau.
    #[arg(long)]
    pub which: DensityKind,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    pub eta: f64,
    #[command(flatten)]
    pub time: TimeArg,
    /// `start:end:points`; defaults to 601 points over the density's range.
    #[arg(long, allow_hyphen_values = true)]
    pub grid: Option<String>,
    /// Output CSV; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Sample CSV written by `simulate`.
    #[arg(long)]
    pub samples: PathBuf,
    #[arg(long, default_value = "P_q")]
    pub which: DensityKind,
    /// Must match the file's metadata when given.
    #[arg(long, allow_hyphen_values = true)]
    pub eta: Option<f64>,
    #[arg(long, allow_hyphen_values = true, conflicts_with = "etat")]
    pub t: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub etat: Option<f64>,
    /// Exit 1 when the KS distance reaches this value.
    #[arg(long, default_value_t = 0.01)]
    pub threshold: f64,
    /// Report JSON; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FpCheckArgs {
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    pub eta: f64,
    #[arg(long, default_value = "-6:6:121", allow_hyphen_values = true)]
    pub q_grid: String,
    #[arg(long, default_value = "0.1:5:50", allow_hyphen_values = true)]
    pub t_grid: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RootsArgs {
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    pub eta: f64,
    #[command(flatten)]
    pub times: TimesArg,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MeanPurityArgs {
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    pub eta: f64,
    #[command(flatten)]
    pub times: TimesArg,
    /// Directory of sample CSVs to add Monte Carlo columns from.
    #[arg(long)]
    pub samples_dir: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}
