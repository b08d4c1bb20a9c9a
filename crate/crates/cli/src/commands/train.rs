use mdinet::dataset::{CalibDataset, ParamDataset};
use mdinet::neural::{Activation, CalibEstimator, EstimatorConfig, ParamPredictor, PredictorConfig, TrainConfig, TrainReport};
use mdinet::{Error, Result};

use crate::{Output, RunConfig};

/// Network keys shared by both kinds: `hidden` (list of widths),
/// `activation`, `learning_rate`, `momentum`, `epochs`, `batch_size`,
/// `validation_fraction`, `patience` (0 disables early stopping).
fn network(cfg: &mut RunConfig, hidden: &mut Vec<usize>, activation: &mut Activation, train: &mut TrainConfig) -> Result<()> {
    if let Some(h) = cfg.take_list("hidden")? {
        *hidden = h;
    }
    if hidden.is_empty() || hidden.contains(&0) {
        return Err(Error::Config("hidden widths must be positive".into()));
    }
    if let Some(name) = cfg.take::<String>("activation")? {
        *activation = match Activation::from_name(&name) {
            Some(a @ (Activation::Sigmoid | Activation::Tanh)) => a,
            _ => return Err(Error::Config(format!("hidden activation `{name}` is not sigmoid or tanh"))),
        };
    }
    train.learning_rate = cfg.take_or("learning_rate", train.learning_rate)?;
    train.momentum = cfg.take_or("momentum", train.momentum)?;
    train.epochs = cfg.take_or("epochs", train.epochs)?;
    train.batch_size = cfg.take_or("batch_size", train.batch_size)?;
    train.validation_fraction = cfg.take_or("validation_fraction", train.validation_fraction)?;
    if let Some(p) = cfg.take::<usize>("patience")? {
        train.patience = (p > 0).then_some(p);
    }
    train.validate().map_err(|e| Error::Config(e.to_string()))
}

pub fn predictor_config(cfg: &mut RunConfig) -> Result<PredictorConfig> {
    let mut p = PredictorConfig::new(cfg.seed);
    network(cfg, &mut p.hidden, &mut p.activation, &mut p.train)?;
    p.execution = cfg.execution;
    Ok(p)
}

/// Adds `joint` (one two-output network or two networks).
pub fn estimator_config(cfg: &mut RunConfig) -> Result<EstimatorConfig> {
    let mut e = EstimatorConfig::new(cfg.seed);
    network(cfg, &mut e.hidden, &mut e.activation, &mut e.train)?;
    e.joint = cfg.take_or("joint", e.joint)?;
    e.execution = cfg.execution;
    Ok(e)
}

fn summary(reports: &[TrainReport]) -> Vec<String> {
    reports
        .iter()
        .enumerate()
        .map(|(i, r)| {
            format!(
                "network {i}: loss {:.3e} -> {:.3e}, kept epoch {} of {}",
                r.initial_loss,
                r.final_loss(),
                r.best_epoch,
                r.loss_history.len()
            )
        })
        .collect()
}

/// `kind = predictor` (default) or `kind = estimator`; `dataset = <path>`.
pub fn run(cfg: &mut RunConfig) -> Result<Output> {
    let kind = cfg.take_or("kind", "predictor".to_string())?;
    let dataset = cfg.input_path("dataset")?;
    match kind.as_str() {
        "predictor" => {
            let pc = predictor_config(cfg)?;
            cfg.finish()?;
            let ds = ParamDataset::load(&dataset)?;
            let (model, reports) = ParamPredictor::train(&ds, &pc)?;
            Ok(Output {
                body: model.to_text(),
                messages: summary(&reports),
            })
        }
        "estimator" => {
            let ec = estimator_config(cfg)?;
            cfg.finish()?;
            let ds = CalibDataset::load(&dataset)?;
            let (model, reports) = CalibEstimator::train(&ds, &ec)?;
            Ok(Output {
                body: model.to_text(),
                messages: summary(&reports),
            })
        }
        other => Err(Error::Config(format!("unknown model kind `{other}` (predictor, estimator)"))),
    }
}
