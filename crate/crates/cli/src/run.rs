use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::Subcommand;
use mdinet::config::KvConfig;
use mdinet::model::{CharlieConditions, UserConditions};
use mdinet::{Error, Execution, Result};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Optimized asymmetric and symmetric key rates over a length grid.
    Simulate,
    /// Parameter corpus over a condition grid, or a calibration corpus.
    GenDataset,
    /// Fit a parameter predictor or a drift estimator to a corpus.
    Train,
    /// Predicted parameters for given conditions.
    Predict,
    /// Drift estimates from observed link statistics.
    Calibrate,
    /// Predictor against local search on random conditions.
    Bench,
    /// Star-network provisioning and drift scenario.
    Netsim,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::GenDataset => "gen-dataset",
            Command::Train => "train",
            Command::Predict => "predict",
            Command::Calibrate => "calibrate",
            Command::Bench => "bench",
            Command::Netsim => "netsim",
        }
    }
}

/// A command's configuration: the parsed key-value file plus the seed.
/// Commands take the keys they know; leftovers are rejected by
/// [`RunConfig::finish`].
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: Command,
    pub seed: u64,
    /// SHA-256 of the canonical configuration text.
    pub config_hash: String,
    pub execution: Execution,
    kv: KvConfig,
    base_dir: PathBuf,
}

impl RunConfig {
    /// Relative paths in `kv` resolve against `base_dir`.
    pub fn new(command: Command, kv: KvConfig, seed: u64, base_dir: &Path) -> Result<Self> {
        let digest = Sha256::digest(kv.canonical().as_bytes());
        let mut config_hash = String::with_capacity(64);
        for b in digest {
            let _ = write!(config_hash, "{b:02x}");
        }
        let mut kv = kv;
        let parallel = kv.take_or("parallel", cfg!(feature = "parallel"))?;
        Ok(RunConfig {
            command,
            seed,
            config_hash,
            execution: if parallel { Execution::Parallel } else { Execution::Sequential },
            kv,
            base_dir: base_dir.to_path_buf(),
        })
    }

    pub fn load(command: Command, path: Option<&Path>, seed: u64) -> Result<Self> {
        match path {
            None => Self::new(command, KvConfig::default(), seed, Path::new("")),
            Some(p) => {
                let kv = KvConfig::load(p).map_err(|e| match e {
                    Error::Io { path, source } => Error::Config(format!("cannot read config {}: {source}", path.display())),
                    other => other,
                })?;
                Self::new(command, kv, seed, p.parent().unwrap_or(Path::new("")))
            }
        }
    }

    pub fn from_text(command: Command, text: &str, seed: u64) -> Result<Self> {
        Self::new(command, KvConfig::parse(text)?, seed, Path::new(""))
    }

    /// First line of every output file.
    pub fn provenance(&self) -> String {
        format!(
            "# mdinet {} seed={} config_sha256={}",
            self.command.name(),
            self.seed,
            self.config_hash
        )
    }

    pub fn take<T: FromStr>(&mut self, key: &str) -> Result<Option<T>> {
        self.kv.take(key)
    }

    pub fn take_or<T: FromStr>(&mut self, key: &str, default: T) -> Result<T> {
        self.kv.take_or(key, default)
    }

    pub fn take_list<T: FromStr>(&mut self, key: &str) -> Result<Option<Vec<T>>> {
        self.kv.take_list(key)
    }

    pub fn kv_mut(&mut self) -> &mut KvConfig {
        &mut self.kv
    }

    pub fn resolve(&self, raw: &str) -> PathBuf {
        let p = Path::new(raw);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    /// A required input file; it must exist.
    pub fn input_path(&mut self, key: &str) -> Result<PathBuf> {
        let raw = self
            .kv
            .take_str(key)
            .ok_or_else(|| Error::Config(format!("`{}` needs `{key} = <path>`", self.command.name())))?;
        self.existing(key, &raw)
    }

    pub fn optional_input_path(&mut self, key: &str) -> Result<Option<PathBuf>> {
        match self.kv.take_str(key) {
            None => Ok(None),
            Some(raw) => self.existing(key, &raw).map(Some),
        }
    }

    fn existing(&self, key: &str, raw: &str) -> Result<PathBuf> {
        let p = self.resolve(raw);
        if !p.is_file() {
            return Err(Error::Config(format!("{key}: no such file {}", p.display())));
        }
        Ok(p)
    }

    /// Relay and attenuation keys shared by the physics commands: `finite`
    /// toggles statistical fluctuations, `alpha` is in dB/km.
    pub fn link_constants(&mut self) -> Result<(CharlieConditions, f64)> {
        let finite = self.take_or("finite", true)?;
        let alpha = self.take_or("alpha", UserConditions::DEFAULT_ALPHA)?;
        let charlie = if finite {
            CharlieConditions::standard()
        } else {
            CharlieConditions::standard().asymptotic()
        };
        Ok((charlie, alpha))
    }

    /// Rejects keys no one consumed. Call before any expensive work.
    pub fn finish(&mut self) -> Result<()> {
        std::mem::take(&mut self.kv).finish()
    }
}
