//! Command-line front end for the `avoidset` library.

pub mod commands;
pub mod config;

use std::ffi::OsString;

use clap::Parser;

use crate::config::{Cli, Command, RunConfig, UsageError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VIOLATIONS: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Parses `argv`, runs the subcommand and returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(outcome) => {
            for line in outcome.lines {
                println!("{line}");
            }
            if outcome.failed {
                EXIT_VIOLATIONS
            } else {
                EXIT_OK
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                EXIT_USAGE
            } else {
                EXIT_VIOLATIONS
            }
        }
    }
}

fn execute(cli: &Cli) -> anyhow::Result<commands::Outcome> {
    let mut cfg = RunConfig::resolve(cli.command, &cli.flags)?;
    if let Some(k) = cfg.threads {
        if k == 0 {
            return Err(config::usage("--threads must be positive"));
        }
        // a second call in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(k).build_global();
    }
    match cli.command {
        Command::Presets => commands::presets(&cfg),
        Command::Stage => commands::stage(&mut cfg),
        Command::Tree => commands::tree(&mut cfg),
        Command::Verify => commands::verify(&mut cfg),
        Command::Analyze => commands::analyze(&mut cfg),
        Command::Dim => commands::dim(&mut cfg),
        Command::Schedule => commands::schedule(&mut cfg),
    }
}
