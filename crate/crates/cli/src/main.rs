mod args;
mod commands;
mod config;
mod error;
mod output;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use args::{Cli, Command, Format};
use config::Settings;
use error::{usage, CliError, CliResult};
use output::{resolve_output, Sink};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(cli: Cli) -> CliResult<()> {
    let settings = match &cli.config {
        Some(path) => Settings::load(path)?,
        None => Settings::default(),
    };
    let (name, schema) = match &cli.command {
        Command::Constants(_) => ("constants", commands::constants::schema()),
        Command::Rate(_) => ("rate", commands::rate::schema()),
        Command::Simulate(_) => ("simulate", commands::simulate::schema()),
        Command::Tails(_) => ("tails", commands::tails::schema()),
        Command::Verify(_) => ("verify", commands::verify::schema()),
    };
    settings.validate(name, &schema)?;
    let format = settings.pick(cli.format, "format")?.unwrap_or(Format::Json);
    let output = resolve_output(settings.pick(cli.output.clone(), "output")?);
    if let Some(workers) = settings.pick(cli.workers, "workers")? {
        if workers == 0 {
            return Err(usage("--workers must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build_global()
            .map_err(|e| usage(format!("cannot start worker pool: {e}")))?;
    }

    let mut sink = Sink::new();
    let result = match &cli.command {
        Command::Constants(a) => commands::constants::run(a, &settings, &mut sink),
        Command::Rate(a) => commands::rate::run(a, &settings, &mut sink),
        Command::Simulate(a) => commands::simulate::run(a, &settings, &mut sink),
        Command::Tails(a) => commands::tails::run(a, &settings, &mut sink),
        Command::Verify(a) => commands::verify::run(a, &settings, &mut sink),
    };
    // A failed suite still reports every check.
    if result.is_ok() || matches!(result, Err(CliError::VerifyFailed(_))) {
        sink.write(format, output.as_deref())?;
    }
    result
}
