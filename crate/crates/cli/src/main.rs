//! `facegate` command-line entry point.
//!
//! Exit codes: 0 success, 1 invalid flags or input data, 2 I/O failure.

mod app;
mod commands;
mod params;
mod run;

use std::process::ExitCode;

use clap::error::ErrorKind;

use crate::params::{CliError, Params};
use crate::run::Run;

fn init_logging(verbosity: u8) {
    let level = match verbosity {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        2 => log::LevelFilter::Debug,
        _ => log::LevelFilter::Trace,
    };
    let _ = env_logger::Builder::new()
        .filter_level(level)
        .parse_default_env()
        .format_timestamp(None)
        .try_init();
}

fn threads(m: &clap::ArgMatches) -> Result<usize, CliError> {
    let raw = m.get_one::<String>("threads").map(String::as_str).unwrap_or("0");
    let n: usize = raw.trim().parse().map_err(|_| {
        CliError::Invalid(format!(
            "--threads ({}) must be a non-negative integer, got `{raw}`",
            app::THREADS_ENV
        ))
    })?;
    if n > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Invalid(format!("--threads: {e}")))?;
    }
    Ok(rayon::current_num_threads())
}

fn real_main() -> Result<(), CliError> {
    let subs = app::subcommands();
    let mut cmd = app::command(&subs);
    let matches = match cmd.try_get_matches_from_mut(std::env::args_os()) {
        Ok(m) => m,
        Err(e) => {
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = e.print();
                    Ok(())
                }
                ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => {
                    let _ = e.print();
                    Err(CliError::Invalid("a subcommand is required".into()))
                }
                _ => {
                    let _ = e.print();
                    if e.kind() == ErrorKind::InvalidSubcommand {
                        eprintln!("\n{}", cmd.render_help());
                    }
                    Err(CliError::Invalid(String::new()))
                }
            };
        }
    };
    let (name, sm) = matches.subcommand().expect("subcommand is required");
    let sub = subs
        .iter()
        .find(|s| s.name == name)
        .expect("every subcommand is in the table");
    init_logging(sm.get_count("verbose"));
    let threads = threads(sm)?;
    let params = Params::resolve(sub, sm)?;
    let mut run = Run::new(sub.name, &params, threads)?;
    let status = commands::dispatch(name, &params, &mut run);
    let manifest = run.finish(&params, &status);
    status.and(manifest)
}

fn main() -> ExitCode {
    match real_main() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = e.to_string();
            if !msg.is_empty() {
                eprintln!("error: {msg}");
            }
            ExitCode::from(e.code() as u8)
        }
    }
}
