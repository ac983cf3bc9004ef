//! `cavity-qnd` command-line tool.
//!
//! Every subcommand accepts `--config FILE` holding `key = value` lines with
//! the same names as the flags; flags given on the command line win.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod output;

use std::ffi::OsString;
use std::fs;
use std::process::ExitCode;

use clap::{ArgMatches, CommandFactory, FromArgMatches, Parser, Subcommand};

use commands::{CurveArgs, GateCheckArgs, MonteCarloArgs, ScalingArgs};

pub const EXIT_INFEASIBLE: u8 = 3;
pub const EXIT_NONCONVERGED: u8 = 4;
pub const EXIT_VALIDATION: u8 = 5;

#[derive(Debug, Parser)]
#[command(
    name = "cavity-qnd",
    version,
    about = "Homodyne-measurement entanglement of atoms in a cavity"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Optimal error versus cooperativity for a list of success probabilities.
    #[command(args_override_self = true)]
    Curve(CurveArgs),
    /// Monte Carlo run of the repeat-until-success protocol.
    #[command(args_override_self = true)]
    Montecarlo(MonteCarloArgs),
    /// Exhaustive check of the measurement-based CNOT correction table.
    #[command(args_override_self = true)]
    GateCheck(GateCheckArgs),
    /// Measurement scheme versus unitary-gate scheme error and finesse needs.
    #[command(args_override_self = true)]
    ScalingCompare(ScalingArgs),
}

/// Outcome of a subcommand that ran to completion.
pub enum Status {
    Ok,
    Nonconverged,
    ValidationFailed,
}

#[derive(Debug)]
pub enum CliError {
    Model(cavity_qnd::Error),
    Io(String),
    Config(String),
}

impl From<cavity_qnd::Error> for CliError {
    fn from(e: cavity_qnd::Error) -> Self {
        CliError::Model(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

/// Reads `key = value` lines; `#` starts a comment. Returns flag tokens.
fn config_tokens(path: &str) -> Result<Vec<OsString>, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Io(format!("{path}: {e}")))?;
    let mut tokens = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            CliError::Config(format!("{path}:{}: expected key = value", lineno + 1))
        })?;
        let key = key.trim().replace('_', "-").to_ascii_lowercase();
        let value = value.trim();
        if key == "config" {
            return Err(CliError::Config(format!(
                "{path}:{}: nested config files are not supported",
                lineno + 1
            )));
        }
        match value {
            "true" => tokens.push(format!("--{key}").into()),
            "false" => {}
            _ => {
                tokens.push(format!("--{key}").into());
                tokens.push(value.into());
            }
        }
    }
    Ok(tokens)
}

/// Splices the tokens of any `--config FILE` right after the subcommand name
/// so that explicit flags, which come later, override them.
fn expand_config(args: Vec<OsString>) -> Result<Vec<OsString>, CliError> {
    let mut rest = Vec::with_capacity(args.len());
    let mut files = Vec::new();
    let mut iter = args.into_iter();
    while let Some(a) = iter.next() {
        let s = a.to_string_lossy().into_owned();
        if s == "--config" {
            let path = iter
                .next()
                .ok_or_else(|| CliError::Config("--config needs a file path".into()))?;
            files.push(path.to_string_lossy().into_owned());
        } else if let Some(path) = s.strip_prefix("--config=") {
            files.push(path.to_string());
        } else {
            rest.push(a);
        }
    }
    if files.is_empty() || rest.len() < 2 {
        return Ok(rest);
    }
    let mut out = rest[..2].to_vec();
    for f in &files {
        out.extend(config_tokens(f)?);
    }
    out.extend_from_slice(&rest[2..]);
    Ok(out)
}

/// `key=value` pairs for every resolved argument of the subcommand,
/// including defaults, in declaration order. Output paths are left out.
fn resolved_config(command: &clap::Command, matches: &ArgMatches) -> Vec<(String, String)> {
    let mut out = Vec::new();
    for arg in command.get_arguments() {
        let name = arg.get_id().as_str();
        if matches!(name, "output" | "histogram_output" | "help" | "version") {
            continue;
        }
        if let Ok(Some(values)) = matches.try_get_raw(name) {
            let joined = values
                .map(|v| v.to_string_lossy().into_owned())
                .collect::<Vec<_>>()
                .join(",");
            out.push((name.to_string(), joined));
        }
    }
    out
}

fn run(args: Vec<OsString>) -> Result<Status, CliError> {
    let args = expand_config(args)?;
    let command = Cli::command();
    let matches = match command.clone().try_get_matches_from(args) {
        Ok(m) => m,
        Err(e) => e.exit(),
    };
    let cli = Cli::from_arg_matches(&matches).unwrap_or_else(|e| e.exit());
    let config = matches
        .subcommand()
        .and_then(|(name, sub)| {
            command
                .find_subcommand(name)
                .map(|c| resolved_config(c, sub))
        })
        .unwrap_or_default();
    match cli.command {
        Command::Curve(a) => commands::curve(&a, &config),
        Command::Montecarlo(a) => commands::montecarlo(&a, &config),
        Command::GateCheck(a) => commands::gate_check(&a, &config),
        Command::ScalingCompare(a) => commands::scaling_compare(&a, &config),
    }
}

fn main() -> ExitCode {
    match run(std::env::args_os().collect()) {
        Ok(Status::Ok) => ExitCode::SUCCESS,
        Ok(Status::Nonconverged) => {
            eprintln!("warning: some points did not converge (flagged in output)");
            ExitCode::from(EXIT_NONCONVERGED)
        }
        Ok(Status::ValidationFailed) => ExitCode::from(EXIT_VALIDATION),
        Err(CliError::Model(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_INFEASIBLE)
        }
        Err(CliError::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Io(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}
