use std::process::ExitCode;

use adaptive_newton::cli::{main_with_args, Args, CliError};
use clap::Parser;

fn main() -> ExitCode {
    let args = Args::parse();
    match main_with_args(args) {
        Ok(outcome) => {
            print!("{}", outcome.summary);
            ExitCode::SUCCESS
        }
        Err(e @ CliError::Usage(_)) => {
            eprintln!("{e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
