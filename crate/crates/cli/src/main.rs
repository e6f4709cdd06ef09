mod args;
mod commands;
mod dataset;
mod error;
mod output;
mod selftest;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use serde::Serialize;
use serde_json::Value;

use args::{Cli, Command, Format};
use error::{CliError, EXIT_VALIDATION};

/// Everything that determines the output of a run.
#[derive(Serialize)]
struct RunConfig<'a> {
    seed: u64,
    precision_cap: u32,
    format: Format,
    #[serde(flatten)]
    command: &'a Command,
}

fn with_config(mut report: Value, config: &Value) -> Value {
    if let Value::Object(map) = &mut report {
        map.insert("config".into(), config.clone());
    }
    report
}

fn execute(cli: &Cli) -> Result<i32, CliError> {
    let config = serde_json::to_value(RunConfig {
        seed: cli.seed,
        precision_cap: cli.precision_cap,
        format: cli.format,
        command: &cli.command,
    })?;
    let out = cli.out.as_deref();
    match commands::run(cli) {
        Ok(result) => {
            let bytes = match (&result.table, cli.format) {
                (Some(rows), Format::Csv) => output::csv_rows(rows)?,
                _ => output::render(&with_config(result.report, &config), cli.format)?,
            };
            output::emit(&bytes, out)?;
            Ok(if result.failed { 1 } else { 0 })
        }
        Err(CliError::NotFound(certificate)) => {
            let bytes = output::render(&with_config(certificate.clone(), &config), cli.format)?;
            output::emit(&bytes, out)?;
            Err(CliError::NotFound(certificate))
        }
        Err(e) => Err(e),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(EXIT_VALIDATION as u8),
            };
        }
    };
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(workers) = cli.workers {
        if workers == 0 {
            eprintln!("error: --workers must be at least 1");
            return ExitCode::from(EXIT_VALIDATION as u8);
        }
        pool = pool.num_threads(workers);
    }
    let pool = match pool.build() {
        Ok(pool) => pool,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    };
    match pool.install(|| execute(&cli)) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
