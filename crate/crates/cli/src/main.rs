mod args;
mod commands;
mod error;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use args::{Cli, LogLevel};
use commands::FileConfig;
use error::CliError;

fn report(e: &CliError, json: bool) {
    if json {
        eprintln!("{}", e.to_json_line());
    } else {
        eprintln!("error: {e}");
    }
}

fn main() -> ExitCode {
    let json_errors = std::env::args().any(|a| a == "--json-errors");
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) if json_errors => {
            let first = e.to_string().lines().next().unwrap_or_default().to_string();
            report(
                &CliError::invalid(first.trim_start_matches("error: ")),
                true,
            );
            return ExitCode::from(1);
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(1);
        }
    };

    let cfg = match &cli.config {
        Some(path) => match FileConfig::load(path) {
            Ok(c) => c,
            Err(e) => {
                report(&e, cli.json_errors);
                return ExitCode::from(e.exit_code() as u8);
            }
        },
        None => FileConfig::default(),
    };
    let level = cli.log_level.or(cfg.log_level).unwrap_or(LogLevel::Info);
    env_logger::Builder::new()
        .filter_level(level.into())
        .format_timestamp(None)
        .target(env_logger::Target::Stderr)
        .init();

    match commands::run(cli.command, &cfg) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            report(&e, cli.json_errors);
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
