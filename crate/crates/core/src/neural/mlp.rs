//! Fully connected feed-forward network with per-neuron thresholds.
//!
//! Neuron `i` of a layer computes `f(sum_m w_mi x_m - theta_i)`. Hidden layers
//! use a configurable activation; the output layer is linear. Inputs and
//! outputs pass through normalizers, so the network itself works on `[0, 1]`
//! scaled values.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataset::Normalizer;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Sigmoid,
    Tanh,
    Identity,
}

impl Activation {
    pub fn name(self) -> &'static str {
        match self {
            Activation::Sigmoid => "sigmoid",
            Activation::Tanh => "tanh",
            Activation::Identity => "identity",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "sigmoid" => Some(Activation::Sigmoid),
            "tanh" => Some(Activation::Tanh),
            "identity" => Some(Activation::Identity),
            _ => None,
        }
    }

    #[inline]
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Sigmoid => 1.0 / (1.0 + (-z).exp()),
            Activation::Tanh => z.tanh(),
            Activation::Identity => z,
        }
    }

    /// Derivative expressed through the activation's output `a = f(z)`.
    #[inline]
    fn slope(self, a: f64) -> f64 {
        match self {
            Activation::Sigmoid => a * (1.0 - a),
            Activation::Tanh => 1.0 - a * a,
            Activation::Identity => 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub inputs: usize,
    pub outputs: usize,
    /// Row-major `outputs x inputs`: `weights[i * inputs + m]` connects input
    /// `m` to neuron `i`.
    pub weights: Vec<f64>,
    pub thresholds: Vec<f64>,
    pub activation: Activation,
}

impl Layer {
    fn zeros(inputs: usize, outputs: usize, activation: Activation) -> Self {
        Layer {
            inputs,
            outputs,
            weights: vec![0.0; inputs * outputs],
            thresholds: vec![0.0; outputs],
            activation,
        }
    }

    #[inline]
    fn forward_into(&self, x: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            let row = &self.weights[i * self.inputs..(i + 1) * self.inputs];
            let sum: f64 = row.iter().zip(x).map(|(w, v)| w * v).sum();
            *o = self.activation.apply(sum - self.thresholds[i]);
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    pub layers: Vec<Layer>,
    pub input_norm: Normalizer,
    pub output_norm: Normalizer,
}

/// Loss gradient with the same layout as the model's layers.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weights: Vec<Vec<f64>>,
    pub thresholds: Vec<Vec<f64>>,
}

impl Gradients {
    pub fn zeros_like(model: &MlpModel) -> Self {
        Gradients {
            weights: model.layers.iter().map(|l| vec![0.0; l.weights.len()]).collect(),
            thresholds: model.layers.iter().map(|l| vec![0.0; l.thresholds.len()]).collect(),
        }
    }

    /// Flattened in the order of [`MlpModel::parameters`].
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for (w, t) in self.weights.iter().zip(&self.thresholds) {
            out.extend_from_slice(w);
            out.extend_from_slice(t);
        }
        out
    }

    fn clear(&mut self) {
        for v in self.weights.iter_mut().chain(self.thresholds.iter_mut()) {
            v.iter_mut().for_each(|x| *x = 0.0);
        }
    }
}

impl MlpModel {
    /// All-zero network with identity normalizers.
    pub fn zeros(sizes: &[usize], hidden: Activation) -> Result<Self> {
        if sizes.len() < 2 || sizes.contains(&0) {
            return Err(Error::domain("need at least two layers, each non-empty"));
        }
        let last = sizes.len() - 2;
        let layers = sizes
            .windows(2)
            .enumerate()
            .map(|(k, w)| Layer::zeros(w[0], w[1], if k == last { Activation::Identity } else { hidden }))
            .collect();
        Ok(MlpModel {
            layers,
            input_norm: Normalizer::identity(sizes[0]),
            output_norm: Normalizer::identity(sizes[sizes.len() - 1]),
        })
    }

    /// Weights uniform in `±sqrt(6 / (fan_in + fan_out))`, thresholds zero.
    pub fn new(sizes: &[usize], hidden: Activation, seed: u64) -> Result<Self> {
        let mut model = Self::zeros(sizes, hidden)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for layer in &mut model.layers {
            let limit = (6.0 / (layer.inputs + layer.outputs) as f64).sqrt();
            for w in &mut layer.weights {
                *w = rng.gen_range(-limit..limit);
            }
        }
        Ok(model)
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![self.layers[0].inputs];
        s.extend(self.layers.iter().map(|l| l.outputs));
        s
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].outputs
    }

    pub fn hidden_activation(&self) -> Activation {
        if self.layers.len() > 1 {
            self.layers[0].activation
        } else {
            Activation::Identity
        }
    }

    /// Shapes agree, normalizers fit, every value finite.
    pub fn validate(&self) -> Result<()> {
        if self.layers.is_empty() {
            return Err(Error::domain("model has no layers"));
        }
        for (k, l) in self.layers.iter().enumerate() {
            if l.weights.len() != l.inputs * l.outputs || l.thresholds.len() != l.outputs {
                return Err(Error::domain(format!("layer {} has inconsistent shapes", k + 1)));
            }
            if k > 0 && l.inputs != self.layers[k - 1].outputs {
                return Err(Error::domain(format!("layer {} does not match its predecessor", k + 1)));
            }
            if l.weights.iter().chain(&l.thresholds).any(|v| !v.is_finite()) {
                return Err(Error::domain(format!("layer {} holds non-finite values", k + 1)));
            }
        }
        if self.layers[self.layers.len() - 1].activation != Activation::Identity {
            return Err(Error::domain("output layer must be linear"));
        }
        self.input_norm.validate()?;
        self.output_norm.validate()?;
        if self.input_norm.dim() != self.input_dim() || self.output_norm.dim() != self.output_dim() {
            return Err(Error::domain("normalizer width does not match the network"));
        }
        Ok(())
    }

    /// Network output for normalized input `u`, in normalized units.
    pub fn forward_normalized(&self, u: &[f64]) -> Result<Vec<f64>> {
        if u.len() != self.input_dim() {
            return Err(Error::domain(format!("expected {} inputs, got {}", self.input_dim(), u.len())));
        }
        let mut a = u.to_vec();
        for layer in &self.layers {
            let mut next = vec![0.0; layer.outputs];
            layer.forward_into(&a, &mut next);
            a = next;
        }
        Ok(a)
    }

    /// Output for raw input `x`, in raw units.
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.input_dim() {
            return Err(Error::domain(format!("expected {} inputs, got {}", self.input_dim(), x.len())));
        }
        let u = self.input_norm.normalize(x)?;
        self.output_norm.denormalize(&self.forward_normalized(&u)?)
    }

    /// Every weight and threshold, layer by layer, weights first.
    pub fn parameters(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for l in &self.layers {
            out.extend_from_slice(&l.weights);
            out.extend_from_slice(&l.thresholds);
        }
        out
    }

    pub fn set_parameters(&mut self, values: &[f64]) -> Result<()> {
        let total: usize = self.layers.iter().map(|l| l.weights.len() + l.thresholds.len()).sum();
        if values.len() != total {
            return Err(Error::domain(format!("expected {total} parameters, got {}", values.len())));
        }
        let mut rest = values;
        for l in &mut self.layers {
            let (w, r) = rest.split_at(l.weights.len());
            l.weights.copy_from_slice(w);
            let (t, r) = r.split_at(l.thresholds.len());
            l.thresholds.copy_from_slice(t);
            rest = r;
        }
        Ok(())
    }

    /// Mean squared error over the batch (normalized units), averaged over
    /// samples and outputs.
    pub fn loss(&self, inputs: &[Vec<f64>], targets: &[Vec<f64>]) -> Result<f64> {
        check_batch(self, inputs, targets)?;
        let mut total = 0.0;
        for (u, t) in inputs.iter().zip(targets) {
            let y = self.forward_normalized(u)?;
            total += y.iter().zip(t).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
        }
        Ok(total / (inputs.len() * self.output_dim()) as f64)
    }

    /// Gradient of [`MlpModel::loss`] with respect to every weight and
    /// threshold, by backpropagation.
    pub fn backprop_gradients(&self, inputs: &[Vec<f64>], targets: &[Vec<f64>]) -> Result<Gradients> {
        check_batch(self, inputs, targets)?;
        let mut grads = Gradients::zeros_like(self);
        let mut work = Workspace::new(self);
        let refs: Vec<(&[f64], &[f64])> = inputs.iter().zip(targets).map(|(u, t)| (&u[..], &t[..])).collect();
        self.accumulate(&refs, &mut grads, &mut work);
        Ok(grads)
    }

    /// Adds the batch's loss gradient to `grads` (which is cleared first) and
    /// returns the batch loss.
    pub(crate) fn accumulate(&self, batch: &[(&[f64], &[f64])], grads: &mut Gradients, work: &mut Workspace) -> f64 {
        grads.clear();
        let scale = 1.0 / (batch.len() * self.output_dim()) as f64;
        let depth = self.layers.len();
        let mut loss = 0.0;
        for (u, t) in batch {
            work.acts[0].copy_from_slice(u);
            for (k, layer) in self.layers.iter().enumerate() {
                let (before, after) = work.acts.split_at_mut(k + 1);
                layer.forward_into(&before[k], &mut after[0]);
            }
            let out = &work.acts[depth];
            for (o, (y, tv)) in out.iter().zip(t.iter()).enumerate() {
                let diff = y - tv;
                loss += diff * diff;
                work.deltas[depth - 1][o] = 2.0 * diff * scale;
            }
            for k in (0..depth).rev() {
                let layer = &self.layers[k];
                let (delta_lo, delta_hi) = work.deltas.split_at_mut(k);
                let delta = &delta_hi[0];
                let a_prev = &work.acts[k];
                let gw = &mut grads.weights[k];
                let gt = &mut grads.thresholds[k];
                for i in 0..layer.outputs {
                    let d = delta[i];
                    gt[i] -= d;
                    let row = &mut gw[i * layer.inputs..(i + 1) * layer.inputs];
                    for (g, a) in row.iter_mut().zip(a_prev) {
                        *g += d * a;
                    }
                }
                if k > 0 {
                    let below = &mut delta_lo[k - 1];
                    let act = self.layers[k - 1].activation;
                    for m in 0..layer.inputs {
                        let mut s = 0.0;
                        for i in 0..layer.outputs {
                            s += layer.weights[i * layer.inputs + m] * delta[i];
                        }
                        below[m] = s * act.slope(a_prev[m]);
                    }
                }
            }
        }
        loss * scale
    }
}

/// Per-sample activation and delta buffers reused across a training run.
pub(crate) struct Workspace {
    acts: Vec<Vec<f64>>,
    deltas: Vec<Vec<f64>>,
}

impl Workspace {
    pub(crate) fn new(model: &MlpModel) -> Self {
        let sizes = model.sizes();
        Workspace {
            acts: sizes.iter().map(|n| vec![0.0; *n]).collect(),
            deltas: sizes[1..].iter().map(|n| vec![0.0; *n]).collect(),
        }
    }
}

fn check_batch(model: &MlpModel, inputs: &[Vec<f64>], targets: &[Vec<f64>]) -> Result<()> {
    if inputs.is_empty() || inputs.len() != targets.len() {
        return Err(Error::domain("batch must be non-empty with one target per input"));
    }
    if inputs.iter().any(|u| u.len() != model.input_dim()) || targets.iter().any(|t| t.len() != model.output_dim()) {
        return Err(Error::domain("batch rows do not match the model's layer sizes"));
    }
    Ok(())
}
