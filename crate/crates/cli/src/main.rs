//! `mfdim`: build measures, estimate their multifractal dimensions, project
//! them and run the verification experiments.
//!
//! Exit status: 0 on success (and, for `verify`, a passing verdict), 1 on a
//! runtime failure or failing verdict, 2 on a usage error.

mod commands;
mod config;
mod output;

use std::process::ExitCode;

use clap::Parser;

use commands::Context;
use config::{apply_run_file, Cli, Command};

/// Bad flags, values or configuration; reported with exit status 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn run(cli: Cli) -> anyhow::Result<bool> {
    let ctx = Context {
        seed: cli.common.seed.unwrap_or(commands::DEFAULT_SEED),
        format: cli.common.format,
        common: cli.common.clone(),
    };
    let threads = cli.common.threads.unwrap_or(0);
    let command = cli.command;
    mfdim::experiments::with_threads(threads, move || match &command {
        Command::Generate(a) => commands::generate(&ctx, a),
        Command::Estimate(a) => commands::estimate(&ctx, a),
        Command::Project(a) => commands::project_cmd(&ctx, a),
        Command::Verify(a) => commands::verify(&ctx, a),
        Command::Report(a) => commands::report(&ctx, a),
    })?
}

fn main() -> ExitCode {
    let mut cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    if let Err(e) = apply_run_file(&mut cli) {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    let name = cli.command.name();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("{name}: verdict FAIL");
            ExitCode::from(1)
        }
        Err(e) if e.downcast_ref::<UsageError>().is_some() => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
