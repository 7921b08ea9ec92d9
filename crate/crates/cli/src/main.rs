use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let cli = segforge_cli::Cli::parse();
    match segforge_cli::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
