//! The split black-box f = l ∘ g: a multilayer perceptron latent map g
//! followed by an affine head l. The head is exactly linear-affine; no
//! nonlinearity sits between the latent vector and the output.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{ensure_finite, softmax, Matrix};
use crate::rng::CounterRng;

pub const CHECKPOINT_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Linear,
    Relu,
}

impl Activation {
    #[inline]
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Linear => z,
            // Subgradient at 0 is taken as 0, see `grad`.
            Activation::Relu => {
                if z > 0.0 {
                    z
                } else {
                    0.0
                }
            }
        }
    }

    #[inline]
    fn grad(self, z: f64) -> f64 {
        match self {
            Activation::Linear => 1.0,
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub weight: Matrix,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitModel {
    pub layers: Vec<Layer>,
    pub head_weight: Matrix,
    pub head_bias: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    CrossEntropy,
    Mse,
}

/// Adam training configuration. Defaults match the usual Adam settings:
/// lr 1e-3, beta1 0.9, beta2 0.999, eps 1e-8.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub loss_kind: LossKind,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 0.0,
            epochs: 10,
            batch_size: 32,
            loss_kind: LossKind::CrossEntropy,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub loss: f64,
    /// Accuracy for cross-entropy training, RMSE for MSE training.
    pub metric: f64,
}

impl SplitModel {
    pub fn new(layers: Vec<Layer>, head_weight: Matrix, head_bias: Vec<f64>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Empty("model layers"));
        }
        for w in layers.windows(2) {
            if w[1].weight.cols != w[0].weight.rows {
                return Err(Error::DimensionMismatch {
                    context: "layer chain",
                    expected: w[0].weight.rows,
                    got: w[1].weight.cols,
                });
            }
        }
        for layer in &layers {
            if layer.bias.len() != layer.weight.rows {
                return Err(Error::DimensionMismatch {
                    context: "layer bias",
                    expected: layer.weight.rows,
                    got: layer.bias.len(),
                });
            }
        }
        let d_h = layers.last().unwrap().weight.rows;
        if head_weight.cols != d_h {
            return Err(Error::DimensionMismatch {
                context: "head weight",
                expected: d_h,
                got: head_weight.cols,
            });
        }
        if head_bias.len() != head_weight.rows {
            return Err(Error::DimensionMismatch {
                context: "head bias",
                expected: head_weight.rows,
                got: head_bias.len(),
            });
        }
        Ok(SplitModel {
            layers,
            head_weight,
            head_bias,
        })
    }

    /// Fresh MLP with ReLU hidden layers, a linear layer producing the
    /// latent vector, and an affine head. Weights are initialized
    /// uniformly in ±1/sqrt(fan_in), seeded.
    pub fn new_mlp(d_x: usize, hidden: &[usize], d_h: usize, d_y: usize, seed: u64) -> Self {
        let mut rng = CounterRng::new(seed);
        let mut layers = Vec::new();
        let mut fan_in = d_x;
        for &width in hidden {
            layers.push(init_layer(&mut rng, fan_in, width, Activation::Relu));
            fan_in = width;
        }
        layers.push(init_layer(&mut rng, fan_in, d_h, Activation::Linear));
        let head = init_layer(&mut rng, d_h, d_y, Activation::Linear);
        SplitModel {
            layers,
            head_weight: head.weight,
            head_bias: head.bias,
        }
    }

    pub fn d_x(&self) -> usize {
        self.layers[0].weight.cols
    }

    pub fn d_h(&self) -> usize {
        self.layers.last().unwrap().weight.rows
    }

    pub fn d_y(&self) -> usize {
        self.head_weight.rows
    }

    /// h = g(x)
    pub fn forward_latent(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.d_x() {
            return Err(Error::DimensionMismatch {
                context: "forward_latent",
                expected: self.d_x(),
                got: x.len(),
            });
        }
        let mut a = x.to_vec();
        for layer in &self.layers {
            let mut z = layer.weight.matvec(&a)?;
            for (zi, b) in z.iter_mut().zip(&layer.bias) {
                *zi += b;
            }
            for zi in &mut z {
                *zi = layer.activation.apply(*zi);
            }
            a = z;
        }
        Ok(a)
    }

    /// y = A h + b
    pub fn forward_head(&self, h: &[f64]) -> Result<Vec<f64>> {
        if h.len() != self.d_h() {
            return Err(Error::DimensionMismatch {
                context: "forward_head",
                expected: self.d_h(),
                got: h.len(),
            });
        }
        let mut y = self.head_weight.matvec(h)?;
        for (yi, b) in y.iter_mut().zip(&self.head_bias) {
            *yi += b;
        }
        Ok(y)
    }

    /// Logits are the explained output; probabilities are softmax of the
    /// logits and are reported for display only.
    pub fn predict(&self, x: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let h = self.forward_latent(x)?;
        let logits = self.forward_head(&h)?;
        let probs = softmax(&logits);
        Ok((logits, probs))
    }

    /// Input gradient of the scalar ⟨v, g(x)⟩ by reverse-mode
    /// differentiation: returns w with w_i = Σ_k v_k ∂g_k/∂x_i.
    pub fn pullback_gradient(&self, x: &[f64], v: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.d_x() {
            return Err(Error::DimensionMismatch {
                context: "pullback_gradient input",
                expected: self.d_x(),
                got: x.len(),
            });
        }
        if v.len() != self.d_h() {
            return Err(Error::DimensionMismatch {
                context: "pullback_gradient covector",
                expected: self.d_h(),
                got: v.len(),
            });
        }
        let trace = self.trace_latent(x);
        let mut grad = v.to_vec();
        for (layer, preact) in self.layers.iter().zip(&trace.preacts).rev() {
            for (g, z) in grad.iter_mut().zip(preact) {
                *g *= layer.activation.grad(*z);
            }
            grad = layer.weight.matvec_transposed(&grad)?;
        }
        Ok(grad)
    }

    fn trace_latent(&self, x: &[f64]) -> LatentTrace {
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut preacts = Vec::with_capacity(self.layers.len());
        let mut a = x.to_vec();
        for layer in &self.layers {
            inputs.push(a.clone());
            let mut z = layer.weight.matvec(&a).expect("shape validated");
            for (zi, b) in z.iter_mut().zip(&layer.bias) {
                *zi += b;
            }
            preacts.push(z.clone());
            for zi in &mut z {
                *zi = layer.activation.apply(*zi);
            }
            a = z;
        }
        LatentTrace {
            inputs,
            preacts,
            latent: a,
        }
    }

    /// L2 norm over every weight and bias entry.
    pub fn parameter_l2_norm(&self) -> f64 {
        let mut acc = 0.0;
        for layer in &self.layers {
            acc += layer.weight.data.iter().map(|x| x * x).sum::<f64>();
            acc += layer.bias.iter().map(|x| x * x).sum::<f64>();
        }
        acc += self.head_weight.data.iter().map(|x| x * x).sum::<f64>();
        acc += self.head_bias.iter().map(|x| x * x).sum::<f64>();
        acc.sqrt()
    }
}

struct LatentTrace {
    inputs: Vec<Vec<f64>>,
    preacts: Vec<Vec<f64>>,
    latent: Vec<f64>,
}

fn init_layer(rng: &mut CounterRng, fan_in: usize, fan_out: usize, act: Activation) -> Layer {
    let bound = 1.0 / (fan_in as f64).sqrt();
    let data: Vec<f64> = (0..fan_out * fan_in)
        .map(|_| rng.range(-bound, bound))
        .collect();
    let bias: Vec<f64> = (0..fan_out).map(|_| rng.range(-bound, bound)).collect();
    Layer {
        weight: Matrix::new(fan_out, fan_in, data).expect("sized above"),
        bias,
        activation: act,
    }
}

// --- Training ---

struct AdamState {
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
}

impl AdamState {
    fn new(n: usize) -> Self {
        AdamState {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }

    fn step(&mut self, params: &mut [f64], grads: &[f64], cfg: &TrainConfig) {
        self.t += 1;
        let bc1 = 1.0 - cfg.beta1.powi(self.t as i32);
        let bc2 = 1.0 - cfg.beta2.powi(self.t as i32);
        for i in 0..params.len() {
            self.m[i] = cfg.beta1 * self.m[i] + (1.0 - cfg.beta1) * grads[i];
            self.v[i] = cfg.beta2 * self.v[i] + (1.0 - cfg.beta2) * grads[i] * grads[i];
            let m_hat = self.m[i] / bc1;
            let v_hat = self.v[i] / bc2;
            params[i] -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.eps);
        }
    }
}

/// Trains a copy of `model` on `data` and returns it. Deterministic given
/// the config seed: shuffle order and initialization are fixed.
pub fn train(
    model: &SplitModel,
    data: &[(Vec<f64>, Vec<f64>)],
    cfg: &TrainConfig,
) -> Result<SplitModel> {
    Ok(train_logged(model, data, cfg)?.0)
}

/// Like [`train`] but also returns per-epoch loss and metric
/// (accuracy for cross-entropy, RMSE for MSE).
pub fn train_logged(
    model: &SplitModel,
    data: &[(Vec<f64>, Vec<f64>)],
    cfg: &TrainConfig,
) -> Result<(SplitModel, Vec<EpochStats>)> {
    if data.is_empty() {
        return Err(Error::Empty("training dataset"));
    }
    if cfg.learning_rate <= 0.0
        || !(0.0..1.0).contains(&cfg.beta1)
        || !(0.0..1.0).contains(&cfg.beta2)
        || cfg.weight_decay < 0.0
    {
        return Err(Error::InvalidArgument(
            "training hyperparameters out of range".into(),
        ));
    }
    for (x, t) in data {
        if x.len() != model.d_x() {
            return Err(Error::DimensionMismatch {
                context: "training input",
                expected: model.d_x(),
                got: x.len(),
            });
        }
        if t.len() != model.d_y() {
            return Err(Error::DimensionMismatch {
                context: "training target",
                expected: model.d_y(),
                got: t.len(),
            });
        }
        ensure_finite(x, "training input")?;
        ensure_finite(t, "training target")?;
    }

    let mut model = model.clone();
    let n_params = param_count(&model);
    let mut adam = AdamState::new(n_params);
    let mut rng = CounterRng::new(cfg.seed);
    let batch_size = cfg.batch_size.max(1);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut log = Vec::with_capacity(cfg.epochs);
    let mut step = 0usize;

    for epoch in 0..cfg.epochs {
        rng.shuffle(&mut order);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(batch_size) {
            let mut grads = vec![0.0; n_params];
            let mut batch_loss = 0.0;
            for &idx in batch {
                let (x, target) = &data[idx];
                batch_loss += backprop_example(&model, x, target, cfg.loss_kind, &mut grads)?;
            }
            let scale = 1.0 / batch.len() as f64;
            for g in &mut grads {
                *g *= scale;
            }
            batch_loss *= scale;
            if cfg.weight_decay > 0.0 {
                add_weight_decay(&model, cfg.weight_decay, &mut grads);
                batch_loss += cfg.weight_decay * model.parameter_l2_norm().powi(2);
            }
            if !batch_loss.is_finite() {
                return Err(Error::Diverged { step });
            }
            epoch_loss += batch_loss;
            let mut params = flatten_params(&model);
            adam.step(&mut params, &grads, cfg);
            unflatten_params(&mut model, &params);
            step += 1;
        }
        let metric = evaluate_metric(&model, data, cfg.loss_kind)?;
        log.push(EpochStats {
            epoch,
            loss: epoch_loss / order.chunks(batch_size).len() as f64,
            metric,
        });
    }
    Ok((model, log))
}

/// Accuracy (cross-entropy) or RMSE (MSE) of `model` over `data`.
pub fn evaluate_metric(
    model: &SplitModel,
    data: &[(Vec<f64>, Vec<f64>)],
    loss_kind: LossKind,
) -> Result<f64> {
    match loss_kind {
        LossKind::CrossEntropy => {
            let mut correct = 0usize;
            for (x, target) in data {
                let (logits, _) = model.predict(x)?;
                if argmax(&logits) == argmax(target) {
                    correct += 1;
                }
            }
            Ok(correct as f64 / data.len() as f64)
        }
        LossKind::Mse => {
            let mut acc = 0.0;
            let mut count = 0usize;
            for (x, target) in data {
                let (logits, _) = model.predict(x)?;
                for (y, t) in logits.iter().zip(target) {
                    acc += (y - t) * (y - t);
                    count += 1;
                }
            }
            Ok((acc / count as f64).sqrt())
        }
    }
}

fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    best
}

/// Accumulates dL/dθ for one example into `grads` and returns the loss.
fn backprop_example(
    model: &SplitModel,
    x: &[f64],
    target: &[f64],
    loss_kind: LossKind,
    grads: &mut [f64],
) -> Result<f64> {
    let trace = model.trace_latent(x);
    let h = &trace.latent;
    let logits = model.forward_head(h)?;

    let (loss, mut dlogits) = match loss_kind {
        LossKind::CrossEntropy => {
            let probs = softmax(&logits);
            let mut loss = 0.0;
            let mut d = vec![0.0; logits.len()];
            for k in 0..logits.len() {
                if target[k] > 0.0 {
                    loss -= target[k] * probs[k].max(1e-300).ln();
                }
                d[k] = probs[k] - target[k];
            }
            (loss, d)
        }
        LossKind::Mse => {
            let mut loss = 0.0;
            let mut d = vec![0.0; logits.len()];
            for k in 0..logits.len() {
                let e = logits[k] - target[k];
                loss += e * e;
                d[k] = 2.0 * e;
            }
            (loss, d)
        }
    };

    // Head gradients, then pull dL/dh back through g.
    let mut offset = grads.len();
    let d_h = model.d_h();
    let d_y = model.d_y();
    offset -= d_y; // head bias
    for k in 0..d_y {
        grads[offset + k] += dlogits[k];
    }
    offset -= d_y * d_h; // head weight
    for k in 0..d_y {
        for j in 0..d_h {
            grads[offset + k * d_h + j] += dlogits[k] * h[j];
        }
    }
    let mut dcur = model.head_weight.matvec_transposed(&dlogits)?;
    dlogits.clear();

    for (li, layer) in model.layers.iter().enumerate().rev() {
        let preact = &trace.preacts[li];
        let input = &trace.inputs[li];
        for (g, z) in dcur.iter_mut().zip(preact) {
            *g *= layer.activation.grad(*z);
        }
        let base = layer_offset(model, li);
        let rows = layer.weight.rows;
        let cols = layer.weight.cols;
        for r in 0..rows {
            let dr = dcur[r];
            for c in 0..cols {
                grads[base + r * cols + c] += dr * input[c];
            }
        }
        let bias_base = base + rows * cols;
        for r in 0..rows {
            grads[bias_base + r] += dcur[r];
        }
        if li > 0 {
            dcur = layer.weight.matvec_transposed(&dcur)?;
        }
    }
    Ok(loss)
}

fn layer_offset(model: &SplitModel, layer_index: usize) -> usize {
    let mut off = 0;
    for layer in &model.layers[..layer_index] {
        off += layer.weight.data.len() + layer.bias.len();
    }
    off
}

fn param_count(model: &SplitModel) -> usize {
    let mut n = 0;
    for layer in &model.layers {
        n += layer.weight.data.len() + layer.bias.len();
    }
    n + model.head_weight.data.len() + model.head_bias.len()
}

fn flatten_params(model: &SplitModel) -> Vec<f64> {
    let mut out = Vec::with_capacity(param_count(model));
    for layer in &model.layers {
        out.extend_from_slice(&layer.weight.data);
        out.extend_from_slice(&layer.bias);
    }
    out.extend_from_slice(&model.head_weight.data);
    out.extend_from_slice(&model.head_bias);
    out
}

fn unflatten_params(model: &mut SplitModel, params: &[f64]) {
    let mut off = 0;
    for layer in &mut model.layers {
        let n = layer.weight.data.len();
        layer.weight.data.copy_from_slice(&params[off..off + n]);
        off += n;
        let n = layer.bias.len();
        layer.bias.copy_from_slice(&params[off..off + n]);
        off += n;
    }
    let n = model.head_weight.data.len();
    model.head_weight.data.copy_from_slice(&params[off..off + n]);
    off += n;
    model.head_bias.copy_from_slice(&params[off..]);
}

fn add_weight_decay(model: &SplitModel, lambda: f64, grads: &mut [f64]) {
    let params = flatten_params(model);
    for (g, p) in grads.iter_mut().zip(&params) {
        *g += 2.0 * lambda * p;
    }
}

// --- Checkpoint serialization ---

#[derive(Serialize, Deserialize)]
pub struct Checkpoint {
    format_version: u32,
    d_x: usize,
    d_h: usize,
    d_y: usize,
    layers: Vec<Layer>,
    head_weight: Matrix,
    head_bias: Vec<f64>,
}

pub fn checkpoint_to_json(model: &SplitModel) -> Result<String> {
    let ckpt = Checkpoint {
        format_version: CHECKPOINT_FORMAT_VERSION,
        d_x: model.d_x(),
        d_h: model.d_h(),
        d_y: model.d_y(),
        layers: model.layers.clone(),
        head_weight: model.head_weight.clone(),
        head_bias: model.head_bias.clone(),
    };
    Ok(serde_json::to_string_pretty(&ckpt)?)
}

pub fn checkpoint_from_json(json: &str) -> Result<SplitModel> {
    let ckpt: Checkpoint = serde_json::from_str(json)?;
    if ckpt.format_version != CHECKPOINT_FORMAT_VERSION {
        return Err(Error::Checkpoint(format!(
            "unsupported format version {}",
            ckpt.format_version
        )));
    }
    let model = SplitModel::new(ckpt.layers, ckpt.head_weight, ckpt.head_bias)?;
    if model.d_x() != ckpt.d_x || model.d_h() != ckpt.d_h || model.d_y() != ckpt.d_y {
        return Err(Error::Checkpoint(
            "declared dimensions disagree with layer shapes".into(),
        ));
    }
    for layer in &model.layers {
        ensure_finite(&layer.weight.data, "checkpoint weights")?;
        ensure_finite(&layer.bias, "checkpoint bias")?;
    }
    ensure_finite(&model.head_weight.data, "checkpoint head weights")?;
    ensure_finite(&model.head_bias, "checkpoint head bias")?;
    Ok(model)
}

pub fn save_checkpoint(path: &std::path::Path, model: &SplitModel) -> Result<()> {
    std::fs::write(path, checkpoint_to_json(model)?)?;
    Ok(())
}

pub fn load_checkpoint(path: &std::path::Path) -> Result<SplitModel> {
    let json = std::fs::read_to_string(path)?;
    checkpoint_from_json(&json)
}
