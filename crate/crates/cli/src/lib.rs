//! Batch front end for shock-structure runs: configuration, the
//! `restpoints`/`profile`/`sweep`/`check` commands and their output files.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use std::path::Path;

pub use commands::Outcome;
pub use config::RunConfig;
pub use error::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    RestPoints,
    Profile,
    Sweep,
    Check,
}

pub fn run(command: Command, cfg: &RunConfig, out: &Path) -> Result<Outcome, CliError> {
    match command {
        Command::RestPoints => commands::cmd_restpoints(cfg, out),
        Command::Profile => commands::cmd_profile(cfg, out),
        Command::Sweep => commands::cmd_sweep(cfg, out),
        Command::Check => commands::cmd_check(cfg, out),
    }
}
