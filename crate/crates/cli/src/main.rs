//! `msdk`: command-line front end for the `msd_kmeans` detectors.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 usage or validation error.

mod args;
mod commands;
mod detectors;

use std::fmt;
use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};

/// A usage or validation failure raised by the CLI itself.
#[derive(Debug)]
pub struct Usage(pub String);

impl fmt::Display for Usage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<Usage>() {
            return 2;
        }
        if let Some(e) = cause.downcast_ref::<msd_kmeans::Error>() {
            return match e {
                msd_kmeans::Error::Io { .. } => 1,
                msd_kmeans::Error::Csv(c) if c.is_io_error() => 1,
                _ => 2,
            };
        }
        if cause.is::<std::io::Error>() {
            return 1;
        }
    }
    1
}

/// The error chain joined by ": ", skipping causes already quoted by their parent.
fn message(err: &anyhow::Error) -> String {
    let mut out = String::new();
    for cause in err.chain() {
        let text = cause.to_string();
        if !out.contains(&text) {
            if !out.is_empty() {
                out.push_str(": ");
            }
            out.push_str(&text);
        }
    }
    out
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Detect(c) => commands::detect(c),
        Command::Eval(c) => commands::eval(c),
        Command::Synth(c) => commands::synth(c),
        Command::Bench(c) => commands::bench(c),
        Command::Report(c) => commands::report(c),
        Command::Extract(c) => commands::extract(c),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        // A closed stdout (e.g. piped into `head`) is not a failure.
        Err(e)
            if e.chain().any(|c| {
                c.downcast_ref::<std::io::Error>()
                    .is_some_and(|io| io.kind() == std::io::ErrorKind::BrokenPipe)
            }) =>
        {
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("msdk: {}", message(&e));
            ExitCode::from(exit_code(&e))
        }
    }
}
