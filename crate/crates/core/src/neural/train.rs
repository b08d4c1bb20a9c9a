use log::debug;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::mlp::{Gradients, MlpModel, Workspace};
use crate::dataset::split_indices;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub momentum: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    /// Share of samples held out to pick the best epoch and stop early.
    pub validation_fraction: f64,
    /// Epochs without validation improvement before stopping; `None` runs
    /// every epoch.
    pub patience: Option<usize>,
}

impl TrainConfig {
    pub fn new(seed: u64) -> Self {
        TrainConfig {
            learning_rate: 0.05,
            momentum: 0.9,
            epochs: 2000,
            batch_size: 32,
            seed,
            validation_fraction: 0.1,
            patience: Some(100),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::domain("learning rate must be positive"));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::domain("momentum must lie in [0, 1)"));
        }
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::domain("epochs and batch size must be at least 1"));
        }
        if !(0.0..=0.5).contains(&self.validation_fraction) {
            return Err(Error::domain("validation fraction must lie in [0, 0.5]"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    /// Training-set loss before the first update.
    pub initial_loss: f64,
    /// Training-set loss after each epoch.
    pub loss_history: Vec<f64>,
    /// Validation loss after each epoch; empty without a validation split.
    pub validation_history: Vec<f64>,
    /// Epoch (1-based) whose weights were kept.
    pub best_epoch: usize,
}

impl TrainReport {
    pub fn final_loss(&self) -> f64 {
        self.loss_history[self.best_epoch - 1]
    }
}

/// Mini-batch gradient descent with momentum on raw `(input, target)` pairs,
/// which pass through the model's normalizers first. With a validation split
/// the weights of the best validation epoch are kept.
pub fn train(model: &mut MlpModel, inputs: &[Vec<f64>], targets: &[Vec<f64>], config: &TrainConfig) -> Result<TrainReport> {
    config.validate()?;
    model.validate()?;
    if inputs.len() != targets.len() || inputs.is_empty() {
        return Err(Error::domain("training needs one target per input and at least one sample"));
    }
    let u: Vec<Vec<f64>> = inputs.iter().map(|x| model.input_norm.normalize(x)).collect::<Result<_>>()?;
    let t: Vec<Vec<f64>> = targets.iter().map(|y| model.output_norm.normalize(y)).collect::<Result<_>>()?;

    let (mut train_idx, valid_idx) = if config.validation_fraction > 0.0 && inputs.len() >= 2 {
        split_indices(inputs.len(), config.validation_fraction, config.seed ^ 0x5eed)
    } else {
        ((0..inputs.len()).collect(), Vec::new())
    };
    if train_idx.is_empty() {
        return Err(Error::domain("validation split left no training samples"));
    }
    train_idx.sort_unstable();
    let pick = |idx: &[usize], src: &[Vec<f64>]| -> Vec<Vec<f64>> { idx.iter().map(|&i| src[i].clone()).collect() };
    let (tu, tt) = (pick(&train_idx, &u), pick(&train_idx, &t));
    let (vu, vt) = (pick(&valid_idx, &u), pick(&valid_idx, &t));

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut grads = Gradients::zeros_like(model);
    let mut velocity = vec![0.0; model.parameters().len()];
    let mut work = Workspace::new(model);
    let mut order: Vec<usize> = (0..tu.len()).collect();

    let initial_loss = model.loss(&tu, &tt)?;
    let mut report = TrainReport {
        initial_loss,
        loss_history: Vec::with_capacity(config.epochs),
        validation_history: Vec::new(),
        best_epoch: 0,
    };
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut since_best = 0;

    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        for (b, chunk) in order.chunks(config.batch_size).enumerate() {
            let batch: Vec<(&[f64], &[f64])> = chunk.iter().map(|&i| (&tu[i][..], &tt[i][..])).collect();
            let loss = model.accumulate(&batch, &mut grads, &mut work);
            if !loss.is_finite() {
                return Err(Error::Diverged { epoch, batch: b, loss });
            }
            let g = grads.flatten();
            let mut p = model.parameters();
            for ((v, pi), gi) in velocity.iter_mut().zip(p.iter_mut()).zip(&g) {
                *v = config.momentum * *v - config.learning_rate * gi;
                *pi += *v;
            }
            model.set_parameters(&p)?;
        }
        let train_loss = model.loss(&tu, &tt)?;
        if !train_loss.is_finite() {
            return Err(Error::Diverged {
                epoch,
                batch: order.len().div_ceil(config.batch_size),
                loss: train_loss,
            });
        }
        report.loss_history.push(train_loss);
        let score = if vu.is_empty() {
            train_loss
        } else {
            let v = model.loss(&vu, &vt)?;
            report.validation_history.push(v);
            v
        };
        if best.as_ref().map_or(true, |(s, _)| score < *s) {
            best = Some((score, model.parameters()));
            report.best_epoch = epoch;
            since_best = 0;
        } else {
            since_best += 1;
            if config.patience.is_some_and(|p| since_best >= p) {
                debug!("early stop at epoch {epoch}, best {}", report.best_epoch);
                break;
            }
        }
    }
    if let Some((_, params)) = best {
        model.set_parameters(&params)?;
    }
    Ok(report)
}
