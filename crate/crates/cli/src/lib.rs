//! Command-line experiments over the `mdinet` toolkit.
//!
//! Every command reads a flat `key = value` config, takes its seed from
//! `--seed`, writes one output file whose first line records the command,
//! seed and config hash, and exits with 0 on success, 2 on configuration
//! errors and 3 on runtime errors.

pub mod commands;
pub mod run;

use std::fs;
use std::path::{Path, PathBuf};

use clap::Parser;
use mdinet::{Error, Result};

pub use run::{Command, RunConfig};

#[derive(Debug, Parser)]
#[command(name = "mdinet", version, about = "Asymmetric MDI-QKD key rates, parameter surrogates and drift calibration")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Flat key = value configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 1)]
    pub seed: u64,
    /// Output file.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

/// What a command produced: the output file body and lines for the console.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Output {
    pub body: String,
    pub messages: Vec<String>,
}

pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) => EXIT_CONFIG,
        _ => EXIT_RUNTIME,
    }
}

pub fn execute(cfg: &mut RunConfig) -> Result<Output> {
    match cfg.command {
        Command::Simulate => commands::simulate::run(cfg),
        Command::GenDataset => commands::gen_dataset::run(cfg),
        Command::Train => commands::train::run(cfg),
        Command::Predict => commands::predict::run(cfg),
        Command::Calibrate => commands::calibrate::run(cfg),
        Command::Bench => commands::bench::run(cfg),
        Command::Netsim => commands::netsim::run(cfg),
    }
}

/// Writes `body` behind the provenance line.
pub fn write_output(cfg: &RunConfig, out: &Path, body: &str) -> Result<()> {
    let mut text = cfg.provenance();
    text.push('\n');
    text.push_str(body);
    fs::write(out, text).map_err(|e| Error::Io {
        path: out.to_path_buf(),
        source: e,
    })
}

/// Runs one invocation end to end and returns the process exit code.
pub fn main_with(cli: Cli) -> i32 {
    let result = (|| -> Result<()> {
        let out = cli
            .out
            .clone()
            .ok_or_else(|| Error::Config("--out <path> is required".into()))?;
        let mut cfg = RunConfig::load(cli.command, cli.config.as_deref(), cli.seed)?;
        println!("seed={} config_sha256={}", cfg.seed, cfg.config_hash);
        let output = execute(&mut cfg)?;
        write_output(&cfg, &out, &output.body)?;
        for m in &output.messages {
            println!("{m}");
        }
        println!("wrote {}", out.display());
        Ok(())
    })();
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
