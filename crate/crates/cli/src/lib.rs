//! Driver for plan, train, eval and ablate. Each subcommand reads one TOML
//! config plus `key=value` overrides and works inside the run root given by
//! `LIFELONG_RUN_ROOT` (default `./runs`).

pub mod ablate;
pub mod args;
pub mod commands;
pub mod config;
pub mod error;
pub mod manifest;
pub mod plot;

use std::path::PathBuf;

pub use error::{CliError, CliResult, EXIT_CONFIG, EXIT_EVALUATION, EXIT_TRAINING};

pub const RUN_ROOT_ENV: &str = "LIFELONG_RUN_ROOT";

pub fn run_root() -> PathBuf {
    std::env::var_os(RUN_ROOT_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("runs"))
}

pub fn dispatch(cli: args::Cli) -> CliResult<()> {
    match cli.command {
        args::Command::Plan(a) => commands::plan(a),
        args::Command::Train(a) => commands::train(a),
        args::Command::Eval(a) => commands::eval(a),
        args::Command::Ablate(a) => ablate::ablate(a),
    }
}
