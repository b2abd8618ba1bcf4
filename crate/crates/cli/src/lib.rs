//! Command-line front end: argument handling, experiments and result files.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use std::time::Instant;

use clap::Parser;
use serde::Serialize;

use crate::config::{Cli, Command, Settings};
use crate::error::{CliError, CliResult};
use crate::output::{write_manifest, Manifest};

#[derive(Serialize)]
struct Diagnostic<'a> {
    error: &'a str,
    message: String,
    exit_code: i32,
}

fn execute(command: &Command, settings: &Settings) -> CliResult<(std::path::PathBuf, Vec<String>)> {
    let dir = settings.out.clone();
    let files = match command {
        Command::Mesh(_) => return commands::cmd_mesh(settings),
        Command::Spectrum(_) => commands::cmd_spectrum(settings)?,
        Command::Principal(_) => commands::cmd_principal(settings)?,
        Command::Convergence(_) => commands::cmd_convergence(settings)?,
        Command::Check(_) => commands::cmd_check(settings)?,
    };
    Ok((dir, files))
}

/// Runs the CLI on `args` (including the program name) and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let settings = match Settings::resolve(cli.command.flags()) {
        Ok(s) => s,
        Err(e) => return report(&e),
    };
    let _ = env_logger::Builder::new().parse_filters(&settings.log_level).try_init();
    let start = Instant::now();
    let result = execute(&cli.command, &settings);
    let (dir, outputs, code) = match &result {
        Ok((dir, files)) => (dir.clone(), files.clone(), 0),
        Err(e) => (settings.out.clone(), Vec::new(), report(e)),
    };
    if !matches!(result, Err(CliError::Usage(_))) {
        let manifest = Manifest {
            command: cli.command.name(),
            version: env!("CARGO_PKG_VERSION"),
            settings: &settings,
            seed: settings.seed,
            threads: settings.threads,
            outputs,
            elapsed_seconds: start.elapsed().as_secs_f64(),
        };
        if let Err(e) = write_manifest(&dir, "manifest.json", &manifest) {
            return report(&e).max(code);
        }
    }
    code
}

fn report(e: &CliError) -> i32 {
    let code = e.exit_code();
    let diag = Diagnostic { error: e.kind(), message: e.to_string(), exit_code: code };
    eprintln!("{}", serde_json::to_string(&diag).expect("diagnostic serializes"));
    code
}
