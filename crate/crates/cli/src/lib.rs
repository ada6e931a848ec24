//! Command-line harness: model checks, instance generation, learning runs,
//! eluder searches, operator oracles and quick timings.
//!
//! Exit codes: 0 success, 1 usage, 2 validation, 3 resource cap.

pub mod commands;
pub mod config;
pub mod exit;

use std::ffi::OsString;
use std::io::Write;

use clap::Parser;

pub use exit::{exit_code, UsageError};

/// Environment variable overriding the default enumeration cap.
pub const CAP_ENV_VAR: &str = "OMLE_ENUM_CAP";

#[derive(Debug, Parser)]
#[command(name = "omle", version, about = "Tabular POMDP learning lab (optimistic MLE)")]
pub struct Cli {
    #[command(subcommand)]
    pub command: commands::Command,
}

/// Parses `args` and runs the command, returning the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{}", e.render());
                    0
                }
                _ => {
                    let _ = write!(err, "{}", e.render());
                    1
                }
            };
        }
    };
    match commands::dispatch(cli.command, out, err) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e:#}");
            exit_code(&e)
        }
    }
}
