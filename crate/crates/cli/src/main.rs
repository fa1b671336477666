use std::process::ExitCode;

use clap::Parser;
use lifelong_cli::args::Cli;

fn main() -> ExitCode {
    match lifelong_cli::dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code)
        }
    }
}
