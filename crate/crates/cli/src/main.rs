//! `cvarbound` command line. Exit status 1 means invalid input, 2 means a
//! resource limit refused the request.

mod args;
mod commands;
mod output;

use std::process::ExitCode;

use clap::Parser;

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<cvarbound::Error>() {
        Some(e) if e.is_resource_limit() => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = match args::Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help and version go to stdout and succeed; every other parse failure is a validation error
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::run(cli, std::env::args().skip(1).collect()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
