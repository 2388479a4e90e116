//! Command line front end for the `vmpg` solvers.

pub mod args;
pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod problem;

use args::Cli;
use config::{Command, RunSpec};
use error::CliResult;

/// Resolves the layered configuration and runs the command. Returns the
/// process exit code: 0 when every run converged, 2 otherwise.
pub fn run(cli: &Cli) -> CliResult<i32> {
    let (cfg, env_out) = cli.command.layered()?;
    let spec = RunSpec::resolve(cli.command.kind(), cfg, env_out)?;
    match spec.command {
        Command::Bench => commands::bench(&spec),
        Command::SweepMu => commands::sweep_mu(&spec),
        Command::Consensus => commands::consensus(&spec),
        Command::Gen => commands::gen(&spec),
        Command::Solve => commands::solve_single(&spec),
    }
}
