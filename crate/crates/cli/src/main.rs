mod args_file;
mod cli;
mod output;
mod run;

use std::io::Write;
use std::process::ExitCode;

use clap::Parser;

use cli::Cli;
use run::{Ctx, Output, UsageError};

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<UsageError>().is_some() {
        return 2;
    }
    match err.downcast_ref::<recmax::Error>() {
        Some(e) => match e {
            recmax::Error::DimensionMismatch { .. }
            | recmax::Error::InvalidParameter { .. }
            | recmax::Error::InvalidSubset(_)
            | recmax::Error::Parse { .. }
            | recmax::Error::Malformed { .. }
            | recmax::Error::DimensionDrift { .. }
            | recmax::Error::NotANumber { .. }
            | recmax::Error::EmptyStream
            | recmax::Error::Csv(_)
            | recmax::Error::Json(_)
            | recmax::Error::Io(_) => 2,
            _ => 3,
        },
        // missing or unreadable files
        None if err.downcast_ref::<std::io::Error>().is_some() => 2,
        None => 3,
    }
}

fn write(cli: &Cli, out: Output) -> anyhow::Result<()> {
    let text = match out {
        Output::Json(v) => {
            let mut s = serde_json::to_string_pretty(&output::round_json(v))?;
            s.push('\n');
            s
        }
        Output::Csv(s) | Output::Text(s) => s,
    };
    match &cli.output {
        Some(p) => std::fs::write(p, text)?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn main() -> ExitCode {
    let args = match args_file::expand(std::env::args_os().collect()) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    // clap exits with 2 on usage errors
    let cli = Cli::parse_from(args);
    let ctx = Ctx {
        workers: run::workers(cli.workers),
        format: cli.format,
    };
    match run::run(&cli.command, &ctx).and_then(|out| write(&cli, out)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
