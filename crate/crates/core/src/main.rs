use std::process::ExitCode;

use clap::Parser;

use choquard::cli::{execute, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    ExitCode::from(execute(&cli) as u8)
}
