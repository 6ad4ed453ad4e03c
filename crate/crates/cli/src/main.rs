mod args;
mod commands;
mod config;
mod io;

use std::fmt;
use std::path::Path;
use std::process::ExitCode;

use clap::Parser;
use serde_json::Value;

use args::{Cli, ReportFormat};
use config::Settings;

/// An error with the exit code it maps to: 2 for bad input, 3 for numerical
/// failure.
#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub msg: String,
}

impl CliError {
    pub fn input(msg: impl Into<String>) -> CliError {
        CliError {
            code: 2,
            msg: msg.into(),
        }
    }

    pub fn context(mut self, path: &Path) -> CliError {
        self.msg = format!("{}: {}", path.display(), self.msg);
        self
    }
}

impl From<qc3d::Error> for CliError {
    fn from(e: qc3d::Error) -> CliError {
        CliError {
            code: if e.is_numerical() { 3 } else { 2 },
            msg: e.to_string(),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.msg)
    }
}

fn emit(report: &commands::Report, format: ReportFormat) {
    match format {
        ReportFormat::Json => println!("{}", Value::Object(report.clone())),
        ReportFormat::Text => {
            for (key, value) in report {
                match value {
                    Value::String(s) => println!("{key}: {s}"),
                    other => println!("{key}: {other}"),
                }
            }
        }
    }
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let settings = Settings::resolve(&cli.global)?;
    if let Some(threads) = settings.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| CliError::input(format!("thread pool: {e}")))?;
    }
    let report = commands::run(&cli.command, &settings)?;
    emit(&report, settings.report);
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code)
        }
    }
}
