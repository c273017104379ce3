use std::process::ExitCode;

use clap::Parser;
use pavoc_cli::{exit, execute, Cli, Invocation};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let invocation = Invocation { argv: std::env::args().skip(1).collect(), ..Default::default() };
    match execute(cli, invocation) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit::exit_code(&e))
        }
    }
}
