//! Command-line driver: trajectory ensembles, exact densities and the
//! comparisons between them.

pub mod analysis;
pub mod args;
pub mod compare;
pub mod error;
pub mod io;
pub mod simulate;

pub use args::{Cli, Command};
pub use error::{CliError, Outcome};

pub fn run(cli: &Cli) -> Result<Outcome, CliError> {
    match &cli.command {
        Command::Simulate(a) => simulate::cmd_simulate(a),
        Command::Density(a) => analysis::cmd_density(a),
        Command::Compare(a) => compare::cmd_compare(a),
        Command::FpCheck(a) => analysis::cmd_fp_check(a),
        Command::Roots(a) => analysis::cmd_roots(a),
        Command::MeanPurity(a) => analysis::cmd_mean_purity(a),
    }
}
