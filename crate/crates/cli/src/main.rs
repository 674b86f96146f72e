use std::process::ExitCode;

use clap::Parser;
use fairdispatch_cli::{exit_code, run, Cli};

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(text) => {
            if !text.is_empty() {
                println!("{text}");
            }
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("error: {}", fairdispatch_cli::error_message(&err));
            ExitCode::from(exit_code(&err))
        }
    }
}
