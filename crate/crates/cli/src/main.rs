mod args;
mod commands;
mod settings;

use std::fmt;
use std::process::ExitCode;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

use clap::Parser;

use args::{Cli, Command};
use settings::FileConfig;

/// Exit status for malformed command lines and configs.
const EXIT_USAGE: u8 = 64;
/// Exit status for unreadable contracts, ABIs, and failed deployments.
const EXIT_DATA: u8 = 65;

#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Input(anyhow::Error),
    Other(anyhow::Error),
}

impl Failure {
    fn exit_code(&self) -> ExitCode {
        match self {
            Failure::Usage(_) => ExitCode::from(EXIT_USAGE),
            Failure::Input(_) => ExitCode::from(EXIT_DATA),
            Failure::Other(_) => ExitCode::FAILURE,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(msg) => f.write_str(msg),
            Failure::Input(e) | Failure::Other(e) => write!(f, "{e:#}"),
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Other(e)
    }
}

impl From<gasfuzz_core::Error> for Failure {
    fn from(e: gasfuzz_core::Error) -> Self {
        Failure::Other(e.into())
    }
}

fn run(cli: Cli) -> Result<ExitCode, Failure> {
    let file = FileConfig::load(cli.config.as_deref())?;
    let stop = Arc::new(AtomicBool::new(false));
    if matches!(cli.command, Command::Fuzz(_) | Command::Compare(_)) {
        let flag = Arc::clone(&stop);
        // a second interrupt falls through to the default handler
        let _ = ctrlc::set_handler(move || {
            if flag.swap(true, Ordering::SeqCst) {
                std::process::exit(130);
            }
        });
    }
    match &cli.command {
        Command::Fuzz(a) => commands::fuzz(a, &file, &stop),
        Command::Compare(a) => commands::compare(a, &file, &stop),
        Command::Disasm(a) => commands::disasm(a, &file),
        Command::Cfg(a) => commands::cfg(a, &file),
        Command::Estimate(a) => commands::estimate(a, &file),
        Command::Trace(a) => commands::trace(a, &file),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(failure) => {
            eprintln!("error: {failure}");
            failure.exit_code()
        }
    }
}
