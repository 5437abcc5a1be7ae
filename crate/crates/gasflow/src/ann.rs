//! From-scratch multilayer feedforward network: ReLU hidden layers, an
//! affine output head, reverse-mode gradients, and RMSprop updates under
//! mean-squared-error loss. Also the dummy mean-pressure baseline and
//! the MAE evaluation used by the benchmark.

use rand::{seq::SliceRandom, Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::GasNetwork;

/// Layered weights and biases. `weights[l]` has shape
/// `(layer_sizes[l+1], layer_sizes[l])`, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub layer_sizes: Vec<usize>,
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
}

/// RMSprop training recipe. Defaults follow the published parameter
/// table (learning rate 1e-2, denominator guard 1e-8) with moving-average
/// coefficient 0.9.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub eta: f64,
    pub epsilon: f64,
    pub decay: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            eta: 1e-2,
            epsilon: 1e-8,
            decay: 0.9,
            epochs: 500,
            batch_size: 32,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0) {
            return Err(Error::Config("eta must be > 0".into()));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::Config("epsilon must be > 0".into()));
        }
        if !(self.decay > 0.0 && self.decay < 1.0) {
            return Err(Error::Config("decay must lie in (0, 1)".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be >= 1".into()));
        }
        Ok(())
    }
}

impl Mlp {
    /// Seeded initialization: weights uniform in
    /// `±sqrt(6 / (n_in + n_out))`, biases zero.
    pub fn new(layer_sizes: &[usize], seed: u64) -> Result<Mlp> {
        if layer_sizes.len() < 3 {
            return Err(Error::Config(
                "network needs at least one hidden layer".into(),
            ));
        }
        if layer_sizes.iter().any(|&s| s == 0) {
            return Err(Error::Config("layer sizes must be positive".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut weights = Vec::new();
        let mut biases = Vec::new();
        for w in layer_sizes.windows(2) {
            let (n_in, n_out) = (w[0], w[1]);
            let limit = (6.0 / (n_in + n_out) as f64).sqrt();
            weights.push(
                (0..n_in * n_out)
                    .map(|_| rng.gen_range(-limit..=limit))
                    .collect(),
            );
            biases.push(vec![0.0; n_out]);
        }
        Ok(Mlp {
            layer_sizes: layer_sizes.to_vec(),
            weights,
            biases,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.layer_sizes.last().unwrap()
    }

    fn check_dims(&self) -> Result<()> {
        for (l, w) in self.layer_sizes.windows(2).enumerate() {
            if self.weights[l].len() != w[0] * w[1] || self.biases[l].len() != w[1] {
                return Err(Error::Dimension(format!("layer {l} shape inconsistent")));
            }
        }
        Ok(())
    }

    /// Post-activation values of every layer, input included.
    fn activations(&self, input: &[f64]) -> Vec<Vec<f64>> {
        let n_layers = self.weights.len();
        let mut acts = Vec::with_capacity(n_layers + 1);
        acts.push(input.to_vec());
        for l in 0..n_layers {
            let (n_in, n_out) = (self.layer_sizes[l], self.layer_sizes[l + 1]);
            let prev = &acts[l];
            let mut z = self.biases[l].clone();
            for k in 0..n_out {
                let row = &self.weights[l][k * n_in..(k + 1) * n_in];
                z[k] += row.iter().zip(prev).map(|(w, x)| w * x).sum::<f64>();
            }
            if l + 1 < n_layers {
                // ReLU on hidden layers only; the output head stays affine.
                for v in &mut z {
                    *v = v.max(0.0);
                }
            }
            acts.push(z);
        }
        acts
    }
}

/// Hidden layers apply `ReLU(W x + b)`; the output layer is affine.
pub fn forward(model: &Mlp, input: &[f64]) -> Result<Vec<f64>> {
    if input.len() != model.input_dim() {
        return Err(Error::Dimension(format!(
            "input has {} features, model expects {}",
            input.len(),
            model.input_dim()
        )));
    }
    model.check_dims()?;
    Ok(model.activations(input).pop().unwrap())
}

/// Gradients with the same shapes as the model's weights and biases.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
}

impl Gradients {
    pub fn zeros_like(model: &Mlp) -> Gradients {
        Gradients {
            weights: model.weights.iter().map(|w| vec![0.0; w.len()]).collect(),
            biases: model.biases.iter().map(|b| vec![0.0; b.len()]).collect(),
        }
    }

    fn accumulate(&mut self, other: &Gradients, scale: f64) {
        for (a, b) in self.weights.iter_mut().zip(&other.weights) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += scale * y;
            }
        }
        for (a, b) in self.biases.iter_mut().zip(&other.biases) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += scale * y;
            }
        }
    }
}

/// Reverse-mode gradients of `1/2 * sum_k (y_k - t_k)^2` for one sample.
/// The ReLU subgradient at exactly zero is taken as zero.
pub fn backward(model: &Mlp, input: &[f64], target: &[f64]) -> Result<Gradients> {
    if input.len() != model.input_dim() || target.len() != model.output_dim() {
        return Err(Error::Dimension("backward: input/target shape mismatch".into()));
    }
    model.check_dims()?;
    let acts = model.activations(input);
    let n_layers = model.weights.len();
    let mut grads = Gradients::zeros_like(model);
    // delta = dLoss/dz at the current layer.
    let mut delta: Vec<f64> = acts[n_layers]
        .iter()
        .zip(target)
        .map(|(y, t)| y - t)
        .collect();
    for l in (0..n_layers).rev() {
        let (n_in, n_out) = (model.layer_sizes[l], model.layer_sizes[l + 1]);
        let prev = &acts[l];
        for k in 0..n_out {
            grads.biases[l][k] = delta[k];
            let row = &mut grads.weights[l][k * n_in..(k + 1) * n_in];
            for (i, g) in row.iter_mut().enumerate() {
                *g = delta[k] * prev[i];
            }
        }
        if l > 0 {
            let mut next = vec![0.0; n_in];
            for k in 0..n_out {
                let row = &model.weights[l][k * n_in..(k + 1) * n_in];
                for (i, n) in next.iter_mut().enumerate() {
                    *n += delta[k] * row[i];
                }
            }
            // Gate by the ReLU that produced acts[l].
            for (n, &a) in next.iter_mut().zip(prev.iter()) {
                if a <= 0.0 {
                    *n = 0.0;
                }
            }
            delta = next;
        }
    }
    Ok(grads)
}

/// One RMSprop update on a flat parameter slice:
/// `v := decay v + (1 - decay) g^2`, `p := p - eta g / sqrt(v + eps)`.
pub fn rmsprop_step(params: &mut [f64], grads: &[f64], state: &mut [f64], config: &TrainConfig) {
    debug_assert_eq!(params.len(), grads.len());
    debug_assert_eq!(params.len(), state.len());
    for ((p, &g), v) in params.iter_mut().zip(grads).zip(state.iter_mut()) {
        *v = config.decay * *v + (1.0 - config.decay) * g * g;
        *p -= config.eta * g / (*v + config.epsilon).sqrt();
    }
}

/// Mean squared error over rows (mean over samples and outputs).
pub fn mse(model: &Mlp, inputs: &[Vec<f64>], targets: &[Vec<f64>]) -> f64 {
    let mut acc = 0.0;
    let mut count = 0usize;
    for (x, t) in inputs.iter().zip(targets) {
        let y = model.activations(x).pop().unwrap();
        for (a, b) in y.iter().zip(t) {
            acc += (a - b) * (a - b);
            count += 1;
        }
    }
    if count == 0 {
        0.0
    } else {
        acc / count as f64
    }
}

/// Minibatch RMSprop training loop. Deterministic under the config seed;
/// returns the per-epoch training MSE. Rows are consumed as given
/// (normalize first if needed).
pub fn train(
    model: &mut Mlp,
    inputs: &[Vec<f64>],
    targets: &[Vec<f64>],
    config: &TrainConfig,
) -> Result<Vec<f64>> {
    config.validate()?;
    if inputs.is_empty() || inputs.len() != targets.len() {
        return Err(Error::Dimension("training set empty or ragged".into()));
    }
    for (x, t) in inputs.iter().zip(targets) {
        if x.len() != model.input_dim() || t.len() != model.output_dim() {
            return Err(Error::Dimension("training row does not match model dims".into()));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(0x5eed));
    let mut v_w: Vec<Vec<f64>> = model.weights.iter().map(|w| vec![0.0; w.len()]).collect();
    let mut v_b: Vec<Vec<f64>> = model.biases.iter().map(|b| vec![0.0; b.len()]).collect();
    let mut order: Vec<usize> = (0..inputs.len()).collect();
    let mut history = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(config.batch_size) {
            let mut acc = Gradients::zeros_like(model);
            for &i in batch {
                let g = backward(model, &inputs[i], &targets[i])?;
                acc.accumulate(&g, 1.0 / batch.len() as f64);
            }
            for l in 0..model.weights.len() {
                rmsprop_step(&mut model.weights[l], &acc.weights[l], &mut v_w[l], config);
                rmsprop_step(&mut model.biases[l], &acc.biases[l], &mut v_b[l], config);
            }
        }
        let loss = mse(model, inputs, targets);
        if !loss.is_finite() {
            return Err(Error::Divergence(format!(
                "training loss became non-finite at epoch {epoch}"
            )));
        }
        history.push(loss);
    }
    Ok(history)
}

/// Per-feature affine normalization fitted on the training split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Normalizer {
    pub fn fit(rows: &[&Vec<f64>]) -> Normalizer {
        let dim = rows.first().map(|r| r.len()).unwrap_or(0);
        let n = rows.len().max(1) as f64;
        let mut mean = vec![0.0; dim];
        for r in rows {
            for (m, &x) in mean.iter_mut().zip(r.iter()) {
                *m += x / n;
            }
        }
        let mut std = vec![0.0; dim];
        for r in rows {
            for ((s, &x), m) in std.iter_mut().zip(r.iter()).zip(&mean) {
                *s += (x - m) * (x - m) / n;
            }
        }
        for s in &mut std {
            *s = s.sqrt().max(1e-12);
        }
        Normalizer { mean, std }
    }

    pub fn normalize(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(&self.mean)
            .zip(&self.std)
            .map(|((x, m), s)| (x - m) / s)
            .collect()
    }

    pub fn denormalize(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(&self.mean)
            .zip(&self.std)
            .map(|((z, m), s)| z * s + m)
            .collect()
    }
}

/// Supervised rows plus a train/test partition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub inputs: Vec<Vec<f64>>,
    pub targets: Vec<Vec<f64>>,
    pub train_idx: Vec<usize>,
    pub test_idx: Vec<usize>,
}

impl Dataset {
    /// All rows in the training split.
    pub fn new(inputs: Vec<Vec<f64>>, targets: Vec<Vec<f64>>) -> Result<Dataset> {
        if inputs.len() != targets.len() {
            return Err(Error::Dimension("input/target row counts differ".into()));
        }
        if inputs.is_empty() {
            return Err(Error::Dimension("dataset is empty".into()));
        }
        let train_idx = (0..inputs.len()).collect();
        Ok(Dataset {
            inputs,
            targets,
            train_idx,
            test_idx: Vec::new(),
        })
    }

    /// Seeded split with `test_fraction` of rows held out. Both splits
    /// stay nonempty.
    pub fn split(&mut self, test_fraction: f64, seed: u64) -> Result<()> {
        if !(0.0..1.0).contains(&test_fraction) {
            return Err(Error::Config("test fraction must lie in [0, 1)".into()));
        }
        let n = self.inputs.len();
        let mut idx: Vec<usize> = (0..n).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        idx.shuffle(&mut rng);
        let n_test = ((n as f64 * test_fraction).round() as usize).clamp(
            if test_fraction > 0.0 { 1 } else { 0 },
            n.saturating_sub(1),
        );
        self.test_idx = idx[..n_test].to_vec();
        self.train_idx = idx[n_test..].to_vec();
        if self.train_idx.is_empty() {
            return Err(Error::Dimension("training split is empty".into()));
        }
        Ok(())
    }

    fn rows(&self, idx: &[usize]) -> (Vec<&Vec<f64>>, Vec<&Vec<f64>>) {
        (
            idx.iter().map(|&i| &self.inputs[i]).collect(),
            idx.iter().map(|&i| &self.targets[i]).collect(),
        )
    }
}

/// Anything that maps a feature vector to predictions.
pub trait Predictor {
    fn predict(&self, input: &[f64]) -> Vec<f64>;
}

/// A trained network together with the normalization fitted on its
/// training split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub mlp: Mlp,
    pub input_norm: Normalizer,
    pub target_norm: Normalizer,
}

impl Predictor for TrainedModel {
    fn predict(&self, input: &[f64]) -> Vec<f64> {
        let z = self.input_norm.normalize(input);
        let y = self.mlp.activations(&z).pop().unwrap();
        self.target_norm.denormalize(&y)
    }
}

/// Trains one predictor on the dataset's training split: normalizes
/// inputs and targets to zero mean and unit variance, then runs the
/// RMSprop loop. Returns the model plus the per-epoch loss history.
pub fn fit_predictor(
    data: &Dataset,
    hidden: &[usize],
    config: &TrainConfig,
) -> Result<(TrainedModel, Vec<f64>)> {
    let (in_rows, tg_rows) = data.rows(&data.train_idx);
    if in_rows.is_empty() {
        return Err(Error::Dimension("training split is empty".into()));
    }
    let input_norm = Normalizer::fit(&in_rows);
    let target_norm = Normalizer::fit(&tg_rows);
    let mut sizes = vec![in_rows[0].len()];
    sizes.extend_from_slice(hidden);
    sizes.push(tg_rows[0].len());
    let mut mlp = Mlp::new(&sizes, config.seed)?;
    let norm_in: Vec<Vec<f64>> = in_rows.iter().map(|r| input_norm.normalize(r)).collect();
    let norm_tg: Vec<Vec<f64>> = tg_rows.iter().map(|r| target_norm.normalize(r)).collect();
    let history = train(&mut mlp, &norm_in, &norm_tg, config)?;
    Ok((
        TrainedModel {
            mlp,
            input_norm,
            target_norm,
        },
        history,
    ))
}

/// MAE on the test split, per output and averaged.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MaeReport {
    pub per_output: Vec<f64>,
    pub average: f64,
}

pub fn evaluate_mae(predictor: &dyn Predictor, data: &Dataset) -> Result<MaeReport> {
    if data.test_idx.is_empty() {
        return Err(Error::Dimension("test split is empty".into()));
    }
    let dim = data.targets[data.test_idx[0]].len();
    let mut per_output = vec![0.0; dim];
    for &i in &data.test_idx {
        let y = predictor.predict(&data.inputs[i]);
        if y.len() != dim {
            return Err(Error::Dimension("predictor output dim mismatch".into()));
        }
        for ((acc, p), t) in per_output.iter_mut().zip(&y).zip(&data.targets[i]) {
            *acc += (p - t).abs();
        }
    }
    let n = data.test_idx.len() as f64;
    for v in &mut per_output {
        *v /= n;
    }
    let average = per_output.iter().sum::<f64>() / dim as f64;
    Ok(MaeReport {
        per_output,
        average,
    })
}

/// Constant baseline predicting the midpoint of each node's pressure
/// bounds regardless of input.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DummyMeanPredictor {
    pub values: Vec<f64>,
}

impl Predictor for DummyMeanPredictor {
    fn predict(&self, _input: &[f64]) -> Vec<f64> {
        self.values.clone()
    }
}

pub fn dummy_mean_predictor(network: &GasNetwork) -> DummyMeanPredictor {
    DummyMeanPredictor {
        values: network
            .nodes
            .iter()
            .map(|n| 0.5 * (n.pi_min + n.pi_max))
            .collect(),
    }
}
