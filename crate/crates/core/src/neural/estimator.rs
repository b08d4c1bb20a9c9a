//! Inverse map from a link's observed statistics to its misalignment.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use log::warn;

use super::io::{write_model, Reader, FORMAT_VERSION};
use super::mlp::{Activation, MlpModel};
use super::train::{train, TrainConfig, TrainReport};
use crate::dataset::{fmt_f64, CalibDataset, Normalizer};
use crate::model::ObservedSummary;
use crate::{Error, Execution, Result};

pub const ESTIMATOR_MAGIC: &str = "mdinet-estimator";

#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorConfig {
    pub hidden: Vec<usize>,
    pub activation: Activation,
    /// One network with two outputs, or one network per output.
    pub joint: bool,
    pub train: TrainConfig,
    pub execution: Execution,
}

impl EstimatorConfig {
    /// Trains longer and with a larger step than the generic defaults: the
    /// phase estimate needs a tighter fit than the parameter predictors.
    pub fn new(seed: u64) -> Self {
        EstimatorConfig {
            hidden: vec![20, 20],
            activation: Activation::Sigmoid,
            joint: true,
            train: TrainConfig {
                learning_rate: 0.1,
                epochs: 4000,
                ..TrainConfig::new(seed)
            },
            execution: Execution::default(),
        }
    }
}

/// Estimated misalignment of a link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MisalignmentEstimate {
    pub delta_phi: f64,
    pub e_d: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibEstimator {
    /// Networks over `(e11_X, E_mu_Z, rate)` with rate log-scaled; their
    /// outputs, concatenated, are `(delta_phi, e_d)`.
    pub models: Vec<MlpModel>,
    /// Estimates are clamped to the ranges seen in training.
    pub phi_range: (f64, f64),
    pub ed_range: (f64, f64),
}

fn features(obs: &ObservedSummary) -> Vec<f64> {
    vec![obs.e11_x, obs.e_mu_z, obs.rate]
}

impl CalibEstimator {
    /// Trains on the rows of `dataset` that produce key.
    pub fn train(dataset: &CalibDataset, config: &EstimatorConfig) -> Result<(Self, Vec<TrainReport>)> {
        let rows: Vec<_> = dataset.rows.iter().filter(|r| r.obs.rate > 0.0).collect();
        if rows.len() < dataset.rows.len() {
            warn!("skipping {} calibration rows without key", dataset.rows.len() - rows.len());
        }
        if rows.is_empty() {
            return Err(Error::domain("no calibration rows with positive key rate"));
        }
        let inputs: Vec<Vec<f64>> = rows.iter().map(|r| features(&r.obs)).collect();
        let truths: Vec<[f64; 2]> = rows.iter().map(|r| [r.delta_phi, r.e_d]).collect();
        let span = |k: usize| {
            truths
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), t| (lo.min(t[k]), hi.max(t[k])))
        };
        let input_norm = Normalizer::fit(&inputs, &[false, false, true])?;
        let groups: Vec<Vec<usize>> = if config.joint { vec![vec![0, 1]] } else { vec![vec![0], vec![1]] };

        let trained = config.execution.map(&groups, |outs| -> Result<(MlpModel, TrainReport)> {
            let mut sizes = vec![3];
            sizes.extend(&config.hidden);
            sizes.push(outs.len());
            let targets: Vec<Vec<f64>> = truths.iter().map(|t| outs.iter().map(|&k| t[k]).collect()).collect();
            let seed = config.train.seed.wrapping_add(outs[0] as u64);
            let mut model = MlpModel::new(&sizes, config.activation, seed)?;
            model.input_norm = input_norm.clone();
            model.output_norm = Normalizer::fit(&targets, &vec![false; outs.len()])?;
            let tc = TrainConfig {
                seed,
                ..config.train.clone()
            };
            let report = train(&mut model, &inputs, &targets, &tc)?;
            Ok((model, report))
        });
        let mut models = Vec::new();
        let mut reports = Vec::new();
        for r in trained {
            let (m, rep) = r?;
            models.push(m);
            reports.push(rep);
        }
        Ok((
            CalibEstimator {
                models,
                phi_range: span(0),
                ed_range: span(1),
            },
            reports,
        ))
    }

    /// Estimates `(delta_phi, e_d)` from a link's statistics. A link without
    /// key gives no usable statistics and is reported as infeasible.
    pub fn estimate(&self, obs: &ObservedSummary) -> Result<MisalignmentEstimate> {
        if !(obs.rate > 0.0) || !obs.rate.is_finite() {
            return Err(Error::Infeasible(format!(
                "key rate {} leaves nothing to calibrate from",
                obs.rate
            )));
        }
        if !obs.e11_x.is_finite() || !obs.e_mu_z.is_finite() {
            return Err(Error::domain("observed error rates must be finite"));
        }
        let x = features(obs);
        let mut out = Vec::with_capacity(2);
        for m in &self.models {
            out.extend(m.forward(&x)?);
        }
        Ok(MisalignmentEstimate {
            delta_phi: out[0].clamp(self.phi_range.0, self.phi_range.1),
            e_d: out[1].clamp(self.ed_range.0, self.ed_range.1),
        })
    }

    pub fn validate(&self) -> Result<()> {
        let outputs: usize = self.models.iter().map(|m| m.output_dim()).sum();
        if outputs != 2 || self.models.iter().any(|m| m.input_dim() != 3) {
            return Err(Error::domain("estimator networks must map 3 inputs to 2 outputs in total"));
        }
        for m in &self.models {
            m.validate()?;
        }
        let ok = |(lo, hi): (f64, f64)| lo.is_finite() && hi.is_finite() && lo <= hi;
        if !ok(self.phi_range) || !ok(self.ed_range) {
            return Err(Error::domain("estimator ranges must be ordered"));
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{ESTIMATOR_MAGIC} {FORMAT_VERSION}");
        let _ = writeln!(s, "phi_range {} {}", fmt_f64(self.phi_range.0), fmt_f64(self.phi_range.1));
        let _ = writeln!(s, "ed_range {} {}", fmt_f64(self.ed_range.0), fmt_f64(self.ed_range.1));
        let _ = writeln!(s, "networks {}", self.models.len());
        for m in &self.models {
            write_model(&mut s, m);
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut r = Reader::new(text);
        r.header(ESTIMATOR_MAGIC)?;
        let phi = r.floats("phi_range", 2)?;
        let ed = r.floats("ed_range", 2)?;
        let n: usize = r.single("networks")?;
        if !(1..=2).contains(&n) {
            return Err(Error::ModelFormat {
                field: "networks".into(),
                message: format!("expected 1 or 2, found {n}"),
            });
        }
        let models = (0..n).map(|_| r.model()).collect::<Result<Vec<_>>>()?;
        r.finish()?;
        let e = CalibEstimator {
            models,
            phi_range: (phi[0], phi[1]),
            ed_range: (ed[0], ed[1]),
        };
        e.validate().map_err(|err| Error::ModelFormat {
            field: "networks".into(),
            message: err.to_string(),
        })?;
        Ok(e)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_text(&fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
    }
}
