use std::process::ExitCode;

use clap::Parser;
use cra_cli::error::exit;
use cra_cli::{execute, Cli};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { exit::USAGE } else { exit::OK };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(&cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("cra: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
