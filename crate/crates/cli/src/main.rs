//! `tzsl`: synthetic data, training, evaluation, cross-validation and
//! batch-size sweeps.
//!
//! Exit codes: 0 success, 2 I/O failure, 3 invalid input or usage,
//! 4 numeric failure.

mod args;
mod commands;
mod output;

use std::ffi::OsString;
use std::path::Path;
use std::process::ExitCode;

use clap::Parser;
use tzsl_core::{Error, ErrorKind};

use args::{Cli, Command};

const EXIT_IO: u8 = 2;
const EXIT_INVALID: u8 = 3;
const EXIT_NUMERIC: u8 = 4;

fn exit_code(err: &Error) -> u8 {
    match err.kind() {
        ErrorKind::Io => EXIT_IO,
        ErrorKind::Validation => EXIT_INVALID,
        ErrorKind::Numeric => EXIT_NUMERIC,
    }
}

/// Inserts the `key=value` lines of a `--config` file as flags right after
/// the subcommand, so flags given on the command line override them.
fn expand_config(argv: Vec<OsString>) -> Result<Vec<OsString>, Error> {
    let mut path = None;
    for (i, a) in argv.iter().enumerate() {
        let Some(s) = a.to_str() else { continue };
        if s == "--config" {
            path = argv.get(i + 1).cloned();
        } else if let Some(p) = s.strip_prefix("--config=") {
            path = Some(p.into());
        }
    }
    let Some(path) = path else { return Ok(argv) };
    let path = Path::new(&path);
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut flags = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
            path: path.display().to_string(),
            line: n + 1,
            message: "expected key=value".into(),
        })?;
        let flag = format!("--{}", key.trim().replace('_', "-"));
        match value.trim() {
            "true" => flags.push(flag.into()),
            "false" => {}
            v => {
                flags.push(flag.into());
                flags.push(v.into());
            }
        }
    }
    let split = argv.len().min(2);
    let mut out: Vec<OsString> = argv[..split].to_vec();
    out.extend(flags);
    out.extend_from_slice(&argv[split..]);
    Ok(out)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let argv = match expand_config(std::env::args_os().collect()) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(exit_code(&e));
        }
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_INVALID)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match &cli.command {
        Command::Synth(a) => commands::synth(a),
        Command::Train(a) => commands::train(a),
        Command::Eval(a) => commands::eval(a),
        Command::Cv(a) => commands::cv(a),
        Command::SweepBatch(a) => commands::sweep_batch(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
