use std::process::ExitCode;

use clap::Parser;
use convboot::cli::{run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("convboot: {e}");
            ExitCode::from(e.kind().exit_code())
        }
    }
}
