//! Command-line front end for `weakauto`: dataset generation, marginals,
//! training, oracle verification and runtime benchmarks.
//!
//! Exit status is 0 on success, 1 when a check fails, and 2 for usage or
//! data errors. Every command finishing after argument parsing writes a
//! one-line JSON run manifest to stderr, and next to its `--out` file when
//! there is one.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde::Serialize;

pub mod bench;
pub mod commands;
pub mod formats;

pub use bench::BenchArgs;
pub use commands::{GenArgs, MarginalsArgs, TrainArgs, VerifyArgs};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub const EXIT_OK: u8 = 0;
pub const EXIT_CHECK_FAILED: u8 = 1;
pub const EXIT_USAGE: u8 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "weakauto",
    version,
    about = "Weak supervision through automata"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a weakly supervised Gaussian dataset.
    Gen(GenArgs),
    /// EM targets and log-likelihood of every group under given predictions.
    Marginals(MarginalsArgs),
    /// Train a classifier on a weakly supervised dataset.
    Train(TrainArgs),
    /// Check the engine against brute-force enumeration.
    Verify(VerifyArgs),
    /// Time forward-backward passes over growing sequence lengths.
    Bench(BenchArgs),
}

/// What a command produced: its exit status and main output file.
#[derive(Debug)]
pub struct Outcome {
    pub status: u8,
    pub out: Option<PathBuf>,
}

impl Outcome {
    pub fn ok(out: Option<PathBuf>) -> Self {
        Outcome {
            status: EXIT_OK,
            out,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: &'static str,
    pub params: serde_json::Value,
    pub seed: Option<u64>,
    pub version: &'static str,
    pub elapsed_seconds: f64,
    pub exit_status: u8,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Gen(_) => "gen",
            Command::Marginals(_) => "marginals",
            Command::Train(_) => "train",
            Command::Verify(_) => "verify",
            Command::Bench(_) => "bench",
        }
    }

    fn params(&self) -> serde_json::Value {
        let value = match self {
            Command::Gen(a) => serde_json::to_value(a),
            Command::Marginals(a) => serde_json::to_value(a),
            Command::Train(a) => serde_json::to_value(a),
            Command::Verify(a) => serde_json::to_value(a),
            Command::Bench(a) => serde_json::to_value(a),
        };
        value.unwrap_or(serde_json::Value::Null)
    }

    fn seed(&self) -> Option<u64> {
        match self {
            Command::Gen(a) => Some(a.seed),
            Command::Marginals(_) => None,
            Command::Train(a) => Some(a.seed),
            Command::Verify(a) => Some(a.seed),
            Command::Bench(a) => Some(a.seed),
        }
    }

    fn execute(&self) -> anyhow::Result<Outcome> {
        match self {
            Command::Gen(a) => commands::gen(a),
            Command::Marginals(a) => commands::marginals(a),
            Command::Train(a) => commands::train(a),
            Command::Verify(a) => commands::verify(a),
            Command::Bench(a) => bench::run(a),
        }
    }
}

/// Runs a parsed command, reports errors, and emits the manifest.
pub fn run(cli: Cli) -> u8 {
    let started = Instant::now();
    let command = &cli.command;
    let (status, out) = match command.execute() {
        Ok(outcome) => (outcome.status, outcome.out),
        Err(e) => {
            eprintln!("error: {e:#}");
            (EXIT_USAGE, None)
        }
    };
    let manifest = RunManifest {
        command: command.name(),
        params: command.params(),
        seed: command.seed(),
        version: VERSION,
        elapsed_seconds: started.elapsed().as_secs_f64(),
        exit_status: status,
    };
    if let Ok(line) = serde_json::to_string(&manifest) {
        eprintln!("{line}");
    }
    if let Some(out) = out {
        if let Err(e) = formats::write_json(&formats::manifest_path(&out), &manifest) {
            eprintln!("warning: {e:#}");
        }
    }
    status
}

/// Parses the process arguments and runs the command.
pub fn main_entry() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    ExitCode::from(run(cli))
}
