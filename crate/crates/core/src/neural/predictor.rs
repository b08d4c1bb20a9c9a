//! Learned map from user conditions to protocol parameters.
//!
//! One network per user-side field. Each network sees `(own length, other
//! length, e_d)`, so Bob's fields come from the same networks with the two
//! lengths swapped.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use log::{debug, warn};

use super::io::{write_model, Reader};
use super::mlp::{Activation, MlpModel};
use super::train::{train, TrainConfig, TrainReport};
use crate::dataset::{Normalizer, ParamDataset};
use crate::model::{ProtocolParams, UserSettings, PARAM_NAMES, USER_DIM};
use crate::optimize::{default_param_bounds, repair, SearchMode};
use crate::{Error, Execution, Result};

pub const PREDICTOR_MAGIC: &str = "mdinet-predictor";

#[derive(Debug, Clone, PartialEq)]
pub struct PredictorConfig {
    /// Hidden layer widths.
    pub hidden: Vec<usize>,
    pub activation: Activation,
    pub train: TrainConfig,
    pub execution: Execution,
}

impl PredictorConfig {
    pub fn new(seed: u64) -> Self {
        PredictorConfig {
            hidden: vec![20, 20],
            activation: Activation::Sigmoid,
            train: TrainConfig::new(seed),
            execution: Execution::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamPredictor {
    /// One network per field of [`UserSettings`], in field order.
    pub models: Vec<MlpModel>,
}

impl ParamPredictor {
    /// Trains the eight networks (concurrently under parallel execution) on
    /// the rows that produce key. Every row contributes an Alice sample and a
    /// length-swapped Bob sample.
    pub fn train(dataset: &ParamDataset, config: &PredictorConfig) -> Result<(Self, Vec<TrainReport>)> {
        let rows: Vec<_> = dataset.rows.iter().filter(|r| r.rate > 0.0).collect();
        if rows.len() < dataset.rows.len() {
            debug!("skipping {} rows without key", dataset.rows.len() - rows.len());
        }
        if rows.is_empty() {
            return Err(Error::domain("no dataset rows with positive key rate"));
        }
        let mut inputs = Vec::with_capacity(2 * rows.len());
        let mut targets: Vec<[f64; USER_DIM]> = Vec::with_capacity(2 * rows.len());
        for r in &rows {
            inputs.push(vec![r.l_a, r.l_b, r.e_d]);
            targets.push(r.params.alice.to_array());
            inputs.push(vec![r.l_b, r.l_a, r.e_d]);
            targets.push(r.params.bob.to_array());
        }
        let input_norm = Normalizer::fit(&inputs, &[false; 3])?;
        let mut sizes = vec![3];
        sizes.extend(&config.hidden);
        sizes.push(1);

        let trained = config.execution.map_range(USER_DIM, |k| -> Result<(MlpModel, TrainReport)> {
            let column: Vec<Vec<f64>> = targets.iter().map(|t| vec![t[k]]).collect();
            let seed = config.train.seed.wrapping_add(k as u64);
            let mut model = MlpModel::new(&sizes, config.activation, seed)?;
            model.input_norm = input_norm.clone();
            model.output_norm = Normalizer::fit(&column, &[false])?;
            let tc = TrainConfig {
                seed,
                ..config.train.clone()
            };
            let report = train(&mut model, &inputs, &column, &tc)?;
            debug!("{}: loss {:.3e} at epoch {}", PARAM_NAMES[k], report.final_loss(), report.best_epoch);
            Ok((model, report))
        });
        let mut models = Vec::with_capacity(USER_DIM);
        let mut reports = Vec::with_capacity(USER_DIM);
        for r in trained {
            let (m, rep) = r?;
            models.push(m);
            reports.push(rep);
        }
        Ok((ParamPredictor { models }, reports))
    }

    fn user(&self, own: f64, other: f64, e_d: f64) -> Result<UserSettings> {
        let x = [own, other, e_d];
        let mut v = [0.0; USER_DIM];
        for (slot, m) in v.iter_mut().zip(&self.models) {
            *slot = m.forward(&x)?[0];
        }
        Ok(UserSettings::from_slice(&v))
    }

    /// Parameters for a pair at `(l_a, l_b, e_d)`, repaired into the default
    /// search box and the protocol invariants. Conditions outside the
    /// training envelope are extrapolated with a warning.
    pub fn predict(&self, l_a: f64, l_b: f64, e_d: f64) -> Result<ProtocolParams> {
        if [l_a, l_b, e_d].iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("conditions must be finite"));
        }
        let norm = &self.models[0].input_norm;
        if !norm.covers(&[l_a, l_b, e_d]) || !norm.covers(&[l_b, l_a, e_d]) {
            warn!("conditions ({l_a}, {l_b}, {e_d}) lie outside the training envelope");
        }
        let raw = ProtocolParams {
            alice: self.user(l_a, l_b, e_d)?,
            bob: self.user(l_b, l_a, e_d)?,
        };
        let mut v = raw.to_array();
        repair(SearchMode::Asymmetric, &default_param_bounds(), &mut v);
        Ok(ProtocolParams::from_slice(&v))
    }

    pub fn validate(&self) -> Result<()> {
        if self.models.len() != USER_DIM {
            return Err(Error::domain(format!("predictor needs {USER_DIM} networks, has {}", self.models.len())));
        }
        for m in &self.models {
            m.validate()?;
            if m.input_dim() != 3 || m.output_dim() != 1 {
                return Err(Error::domain("predictor networks map 3 inputs to 1 output"));
            }
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{PREDICTOR_MAGIC} {}", super::io::FORMAT_VERSION);
        let _ = writeln!(s, "networks {}", self.models.len());
        for (k, m) in self.models.iter().enumerate() {
            let _ = writeln!(s, "field {}", PARAM_NAMES[k]);
            write_model(&mut s, m);
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut r = Reader::new(text);
        r.header(PREDICTOR_MAGIC)?;
        let n: usize = r.single("networks")?;
        if n != USER_DIM {
            return Err(Error::ModelFormat {
                field: "networks".into(),
                message: format!("expected {USER_DIM}, found {n}"),
            });
        }
        let mut models = Vec::with_capacity(n);
        for name in PARAM_NAMES.iter().take(USER_DIM) {
            let field: String = r.single("field")?;
            if field != *name {
                return Err(Error::ModelFormat {
                    field: "field".into(),
                    message: format!("expected `{name}`, found `{field}`"),
                });
            }
            models.push(r.model()?);
        }
        r.finish()?;
        let p = ParamPredictor { models };
        p.validate().map_err(|e| Error::ModelFormat {
            field: "networks".into(),
            message: e.to_string(),
        })?;
        Ok(p)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_text(&fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
    }
}
