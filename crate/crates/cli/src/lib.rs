//! `gbv` command-line front end. [`run`] parses arguments, runs one
//! subcommand and returns the process exit status:
//!
//! * 0: success
//! * 1: invalid input, arguments or JSON
//! * 2: a capacity limit or witness search cap was hit
//! * 3: a verification check failed

use std::ffi::OsString;
use std::io::Write;

use clap::Parser;
use thiserror::Error;

pub mod args;
mod commands;
pub mod report;

use args::{Cli, Command};

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] gbv_core::Error),
    #[error("malformed {what} JSON: {source}")]
    Json {
        what: String,
        source: serde_json::Error,
    },
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use gbv_core::Error as E;
        match self {
            CliError::Core(E::Capacity { .. } | E::SearchExhausted { .. }) => 2,
            CliError::Core(E::Verification(_)) => 3,
            _ => 1,
        }
    }
}

/// Applies `GBV_THREADS` to the global thread pool (first call only).
fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("GBV_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n >= 1)
        .ok_or_else(|| CliError::Usage(format!("GBV_THREADS must be a positive integer, got {raw:?}")))?;
    // a pool that already exists keeps its size
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

fn dispatch(cli: &Cli) -> Result<commands::Outcome, CliError> {
    configure_threads()?;
    match &cli.command {
        Command::Variation(a) => commands::variation(a),
        Command::Bvq(a) => commands::bvq(a),
        Command::Multivar(a) => commands::multivar(a),
        Command::Criterion(a) => commands::criterion(a),
        Command::Extremal(a) => commands::extremal(a),
        Command::Forge(a) => commands::forge(a),
    }
}

fn out_path(cli: &Cli) -> Option<&std::path::Path> {
    let o = match &cli.command {
        Command::Variation(a) => &a.output,
        Command::Bvq(a) => &a.output,
        Command::Multivar(a) => &a.output,
        Command::Criterion(a) => &a.output,
        Command::Extremal(a) => &a.output,
        Command::Forge(a) => &a.output,
    };
    o.out.as_deref()
}

/// Runs with explicit output streams; reports go to `stdout` unless `--out`
/// names a file.
pub fn run_with<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(stdout, "{e}");
                0
            } else {
                let _ = write!(stderr, "{e}");
                1
            };
        }
    };
    match dispatch(&cli) {
        Ok(outcome) => {
            let written = match out_path(&cli) {
                Some(path) => std::fs::write(path, &outcome.body).map_err(|source| CliError::Io {
                    path: path.display().to_string(),
                    source,
                }),
                None => stdout.write_all(outcome.body.as_bytes()).map_err(|source| CliError::Io {
                    path: "stdout".into(),
                    source,
                }),
            };
            if let Err(e) = written {
                let _ = writeln!(stderr, "error: {e}");
                return 1;
            }
            if outcome.status != 0 {
                let _ = writeln!(stderr, "{}", status_message(outcome.status));
            }
            outcome.status
        }
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

fn status_message(status: i32) -> &'static str {
    match status {
        2 => "stopped at a capacity limit; the report holds the partial result",
        3 => "verification failed; see the report",
        _ => "finished with errors",
    }
}

pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run_with(argv, &mut std::io::stdout().lock(), &mut std::io::stderr().lock())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_follow_error_kind() {
        use gbv_core::Error as E;
        let cap = CliError::Core(E::Capacity { what: "x".into(), cap: 1 });
        assert_eq!(cap.exit_code(), 2);
        assert_eq!(CliError::Core(E::Verification("x".into())).exit_code(), 3);
        assert_eq!(CliError::Core(E::Domain("x".into())).exit_code(), 1);
        assert_eq!(CliError::Usage("x".into()).exit_code(), 1);
    }

    #[test]
    fn nonzero_status_is_reported_on_stderr() {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let code = run_with(
            [
                "gbv", "forge", "--lambda", r#"{"family":"power","alpha":0}"#, "--q", "2", "--p", "1", "--stages", "1",
                "--cap", "256",
            ],
            &mut out,
            &mut err,
        );
        assert_eq!(code, 2);
        assert!(String::from_utf8(err).unwrap().contains("capacity"));
        assert!(!out.is_empty());
    }
}
