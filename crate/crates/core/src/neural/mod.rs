//! Dense classification head trained from scratch.
//!
//! The aggregation head is `input -> 256 -> 128 -> 1|3`: ReLU hidden layers,
//! inverted dropout after each ReLU, and a sigmoid (one unit) or softmax
//! (several units) output. All arithmetic is `f64`.

mod adam;
mod checkpoint;
mod train;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use checkpoint::{load_mlp, read_mlp, save_mlp, write_mlp, MAGIC as CHECKPOINT_MAGIC};
pub use train::{
    evaluate_macro_f1, train, train_from, weighted_batch_loss, Dataset, EarlyStopping, EpochRecord,
    StopDecision, TrainConfig, TrainOutcome,
};

use crate::features::AlignedFeatures;
use crate::types::{ExampleId, Label, Subtask};

/// Hidden widths of the aggregation head.
pub const AGGREGATION_HIDDEN: [usize; 2] = [256, 128];
pub const DEFAULT_DROPOUT: f64 = 0.1;
/// Probabilities are clamped to `[PROB_EPS, 1 - PROB_EPS]` inside the loss.
pub const PROB_EPS: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NeuralError {
    #[error("invalid architecture: {0}")]
    InvalidArchitecture(String),
    #[error("input has {found} features, network expects {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("parameter shapes do not match")]
    ShapeMismatch,
    #[error("non-finite loss in epoch {epoch}, batch {batch}")]
    NonFiniteLoss { epoch: usize, batch: usize },
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
    #[error("{0} dataset is empty")]
    EmptyDataset(&'static str),
    #[error("class index {label} out of range for {num_classes} classes")]
    LabelOutOfRange { label: usize, num_classes: usize },
    #[error("expected {expected} class weights, got {found}")]
    WeightCount { expected: usize, found: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Sigmoid,
    Softmax,
}

impl Activation {
    pub fn code(self) -> u8 {
        match self {
            Activation::Relu => 1,
            Activation::Sigmoid => 2,
            Activation::Softmax => 3,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            1 => Some(Activation::Relu),
            2 => Some(Activation::Sigmoid),
            3 => Some(Activation::Softmax),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpArchitecture {
    pub input_dim: usize,
    pub hidden: Vec<usize>,
    pub output_dim: usize,
    pub hidden_activation: Activation,
    pub output_activation: Activation,
    pub dropout_rate: f64,
}

impl MlpArchitecture {
    /// ReLU hidden layers; sigmoid output for one unit, softmax otherwise.
    pub fn new(
        input_dim: usize,
        hidden: Vec<usize>,
        output_dim: usize,
        dropout_rate: f64,
    ) -> Result<Self, NeuralError> {
        let arch = MlpArchitecture {
            input_dim,
            hidden,
            output_dim,
            hidden_activation: Activation::Relu,
            output_activation: if output_dim == 1 {
                Activation::Sigmoid
            } else {
                Activation::Softmax
            },
            dropout_rate,
        };
        arch.validate()?;
        Ok(arch)
    }

    /// `input -> 256 -> 128 -> output` with dropout 0.1.
    pub fn aggregation_head(input_dim: usize, output_dim: usize) -> Result<Self, NeuralError> {
        Self::new(
            input_dim,
            AGGREGATION_HIDDEN.to_vec(),
            output_dim,
            DEFAULT_DROPOUT,
        )
    }

    /// Single affine layer plus output activation.
    pub fn logistic(input_dim: usize, output_dim: usize) -> Result<Self, NeuralError> {
        Self::new(input_dim, Vec::new(), output_dim, 0.0)
    }

    pub fn validate(&self) -> Result<(), NeuralError> {
        let bad = |m: &str| Err(NeuralError::InvalidArchitecture(m.to_string()));
        if self.input_dim == 0 || self.output_dim == 0 || self.hidden.contains(&0) {
            return bad("all layer widths must be positive");
        }
        if self.output_dim == 2 {
            return bad("binary problems use a single sigmoid unit");
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return bad("dropout rate must lie in [0, 1)");
        }
        if self.hidden_activation != Activation::Relu {
            return bad("hidden layers use ReLU");
        }
        let expected = if self.output_dim == 1 {
            Activation::Sigmoid
        } else {
            Activation::Softmax
        };
        if self.output_activation != expected {
            return bad("output activation must be sigmoid for one unit, softmax otherwise");
        }
        Ok(())
    }

    pub fn num_classes(&self) -> usize {
        if self.output_dim == 1 {
            2
        } else {
            self.output_dim
        }
    }

    /// `(fan_in, fan_out)` of every dense layer.
    pub fn layer_dims(&self) -> Vec<(usize, usize)> {
        let mut widths = Vec::with_capacity(self.hidden.len() + 2);
        widths.push(self.input_dim);
        widths.extend(&self.hidden);
        widths.push(self.output_dim);
        widths.windows(2).map(|w| (w[0], w[1])).collect()
    }
}

/// Weights (`out x in`, row-major) and bias of one dense layer.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    in_dim: usize,
    out_dim: usize,
    weights: Vec<f64>,
    bias: Vec<f64>,
}

impl Layer {
    pub fn new(
        in_dim: usize,
        out_dim: usize,
        weights: Vec<f64>,
        bias: Vec<f64>,
    ) -> Result<Self, NeuralError> {
        if weights.len() != in_dim * out_dim || bias.len() != out_dim {
            return Err(NeuralError::ShapeMismatch);
        }
        Ok(Layer {
            in_dim,
            out_dim,
            weights,
            bias,
        })
    }

    fn zeros(in_dim: usize, out_dim: usize) -> Self {
        Layer {
            in_dim,
            out_dim,
            weights: vec![0.0; in_dim * out_dim],
            bias: vec![0.0; out_dim],
        }
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    fn affine(&self, x: &[f64]) -> Vec<f64> {
        self.weights
            .chunks_exact(self.in_dim)
            .zip(&self.bias)
            .map(|(row, b)| b + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>())
            .collect()
    }
}

/// Parameters of every layer. Gradients use the same type.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpParams {
    layers: Vec<Layer>,
}

impl MlpParams {
    pub fn zeros(arch: &MlpArchitecture) -> Self {
        MlpParams {
            layers: arch
                .layer_dims()
                .into_iter()
                .map(|(i, o)| Layer::zeros(i, o))
                .collect(),
        }
    }

    pub fn from_layers(arch: &MlpArchitecture, layers: Vec<Layer>) -> Result<Self, NeuralError> {
        let params = MlpParams { layers };
        if !params.fits(arch) {
            return Err(NeuralError::ShapeMismatch);
        }
        Ok(params)
    }

    pub fn fits(&self, arch: &MlpArchitecture) -> bool {
        let dims = arch.layer_dims();
        dims.len() == self.layers.len()
            && dims
                .iter()
                .zip(&self.layers)
                .all(|(&(i, o), l)| l.in_dim == i && l.out_dim == o)
    }

    fn same_shape(&self, other: &MlpParams) -> bool {
        self.layers.len() == other.layers.len()
            && self
                .layers
                .iter()
                .zip(&other.layers)
                .all(|(a, b)| a.in_dim == b.in_dim && a.out_dim == b.out_dim)
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    /// Total number of scalars.
    pub fn len(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.bias.len())
            .sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// All scalars in layer order, weights before bias.
    pub fn values(&self) -> impl Iterator<Item = &f64> {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(&l.bias))
    }

    pub fn values_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.layers
            .iter_mut()
            .flat_map(|l| l.weights.iter_mut().chain(l.bias.iter_mut()))
    }

    pub fn get(&self, index: usize) -> Option<f64> {
        self.values().nth(index).copied()
    }

    pub fn set(&mut self, index: usize, value: f64) -> bool {
        match self.values_mut().nth(index) {
            Some(slot) => {
                *slot = value;
                true
            }
            None => false,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.values().all(|v| v.is_finite())
    }

    pub fn fill(&mut self, value: f64) {
        self.values_mut().for_each(|v| *v = value);
    }

    pub fn scale(&mut self, factor: f64) {
        self.values_mut().for_each(|v| *v *= factor);
    }
}

/// Glorot-uniform weights in `(-l, l)`, `l = sqrt(6 / (fan_in + fan_out))`,
/// zero biases.
pub fn init_params(arch: &MlpArchitecture, seed: u64) -> MlpParams {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let layers = arch
        .layer_dims()
        .into_iter()
        .map(|(fan_in, fan_out)| {
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            let weights = (0..fan_in * fan_out)
                .map(|_| rng.random_range(-limit..limit))
                .collect();
            Layer {
                in_dim: fan_in,
                out_dim: fan_out,
                weights,
                bias: vec![0.0; fan_out],
            }
        })
        .collect();
    MlpParams { layers }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Dropout active, mask drawn from a generator seeded with `seed`.
    Train {
        seed: u64,
    },
    Eval,
}

/// Intermediate values of one forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardCache {
    /// Input of each layer (post-dropout activations of the previous one).
    layer_inputs: Vec<Vec<f64>>,
    /// Pre-activation of each layer.
    pre: Vec<Vec<f64>>,
    /// Inverted-dropout scale factors applied after each hidden layer.
    masks: Vec<Option<Vec<f64>>>,
    output: Vec<f64>,
}

impl ForwardCache {
    pub fn output(&self) -> &[f64] {
        &self.output
    }
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

pub fn softmax(z: &[f64]) -> Vec<f64> {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = z.iter().map(|v| (v - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

pub(crate) fn forward_cached(
    params: &MlpParams,
    arch: &MlpArchitecture,
    x: &[f64],
    mut dropout_rng: Option<&mut ChaCha8Rng>,
) -> Result<ForwardCache, NeuralError> {
    if x.len() != arch.input_dim {
        return Err(NeuralError::DimensionMismatch {
            expected: arch.input_dim,
            found: x.len(),
        });
    }
    let n_layers = params.layers.len();
    let mut cache = ForwardCache {
        layer_inputs: Vec::with_capacity(n_layers),
        pre: Vec::with_capacity(n_layers),
        masks: Vec::with_capacity(n_layers.saturating_sub(1)),
        output: Vec::new(),
    };
    let mut activation = x.to_vec();
    for (l, layer) in params.layers.iter().enumerate() {
        let z = layer.affine(&activation);
        cache.layer_inputs.push(activation);
        if l + 1 == n_layers {
            cache.output = match arch.output_activation {
                Activation::Sigmoid => z.iter().map(|&v| sigmoid(v)).collect(),
                _ => softmax(&z),
            };
            cache.pre.push(z);
            break;
        }
        let mut a: Vec<f64> = z.iter().map(|&v| v.max(0.0)).collect();
        let mask = match dropout_rng.as_deref_mut() {
            Some(rng) if arch.dropout_rate > 0.0 => {
                let keep_scale = 1.0 / (1.0 - arch.dropout_rate);
                let mask: Vec<f64> = (0..a.len())
                    .map(|_| {
                        if rng.random::<f64>() < arch.dropout_rate {
                            0.0
                        } else {
                            keep_scale
                        }
                    })
                    .collect();
                a.iter_mut().zip(&mask).for_each(|(v, m)| *v *= m);
                Some(mask)
            }
            _ => None,
        };
        cache.masks.push(mask);
        cache.pre.push(z);
        activation = a;
    }
    Ok(cache)
}

pub fn forward(
    params: &MlpParams,
    arch: &MlpArchitecture,
    x: &[f64],
    mode: Mode,
) -> Result<(Vec<f64>, ForwardCache), NeuralError> {
    let cache = match mode {
        Mode::Train { seed } => {
            forward_cached(params, arch, x, Some(&mut ChaCha8Rng::seed_from_u64(seed)))?
        }
        Mode::Eval => forward_cached(params, arch, x, None)?,
    };
    Ok((cache.output.clone(), cache))
}

/// Weighted binary (one output) or categorical cross-entropy.
pub fn weighted_loss(output: &[f64], target: usize, weight: f64) -> f64 {
    let clamp = |p: f64| p.clamp(PROB_EPS, 1.0 - PROB_EPS);
    if output.len() == 1 {
        let p = clamp(output[0]);
        if target == 1 {
            -weight * p.ln()
        } else {
            -weight * (1.0 - p).ln()
        }
    } else {
        -weight * clamp(output[target]).ln()
    }
}

/// dLoss/d(output pre-activation). Zero where the clamp is active, which is
/// the exact derivative of the clamped loss.
fn output_delta(output: &[f64], target: usize, weight: f64) -> Vec<f64> {
    let inside = |p: f64| (PROB_EPS..=1.0 - PROB_EPS).contains(&p);
    if output.len() == 1 {
        let p = output[0];
        if !inside(p) {
            return vec![0.0];
        }
        vec![weight * (p - target as f64)]
    } else {
        if !inside(output[target]) {
            return vec![0.0; output.len()];
        }
        output
            .iter()
            .enumerate()
            .map(|(k, &p)| weight * (p - if k == target { 1.0 } else { 0.0 }))
            .collect()
    }
}

pub(crate) fn accumulate_gradients(
    params: &MlpParams,
    cache: &ForwardCache,
    target: usize,
    weight: f64,
    grads: &mut MlpParams,
) {
    let mut delta = output_delta(&cache.output, target, weight);
    for l in (0..params.layers.len()).rev() {
        let layer = &params.layers[l];
        let input = &cache.layer_inputs[l];
        let g = &mut grads.layers[l];
        for (o, &d) in delta.iter().enumerate() {
            if d == 0.0 {
                continue;
            }
            g.bias[o] += d;
            let row = &mut g.weights[o * layer.in_dim..(o + 1) * layer.in_dim];
            row.iter_mut().zip(input).for_each(|(gw, x)| *gw += d * x);
        }
        if l == 0 {
            break;
        }
        let mut prev = vec![0.0; layer.in_dim];
        for (o, &d) in delta.iter().enumerate() {
            if d == 0.0 {
                continue;
            }
            let row = &layer.weights[o * layer.in_dim..(o + 1) * layer.in_dim];
            prev.iter_mut().zip(row).for_each(|(p, w)| *p += w * d);
        }
        if let Some(mask) = &cache.masks[l - 1] {
            prev.iter_mut().zip(mask).for_each(|(p, m)| *p *= m);
        }
        prev.iter_mut().zip(&cache.pre[l - 1]).for_each(|(p, &z)| {
            if z <= 0.0 {
                *p = 0.0;
            }
        });
        delta = prev;
    }
}

/// Gradient of [`weighted_loss`] with respect to every parameter, using the
/// dropout mask recorded in `cache`.
pub fn backward(
    params: &MlpParams,
    arch: &MlpArchitecture,
    cache: &ForwardCache,
    target: usize,
    weight: f64,
) -> Result<MlpParams, NeuralError> {
    if !params.fits(arch) || cache.layer_inputs.len() != params.layers.len() {
        return Err(NeuralError::ShapeMismatch);
    }
    if target >= arch.num_classes() {
        return Err(NeuralError::LabelOutOfRange {
            label: target,
            num_classes: arch.num_classes(),
        });
    }
    let mut grads = MlpParams::zeros(arch);
    accumulate_gradients(params, cache, target, weight, &mut grads);
    Ok(grads)
}

/// Full class distribution; a single sigmoid output `p` becomes `(1-p, p)`.
pub fn class_probabilities(output: &[f64]) -> Vec<f64> {
    if output.len() == 1 {
        vec![1.0 - output[0], output[0]]
    } else {
        output.to_vec()
    }
}

/// Binary: class 1 iff `p >= threshold`. Otherwise argmax, lowest index on ties.
pub fn decide(output: &[f64], threshold: f64) -> usize {
    if output.len() == 1 {
        usize::from(output[0] >= threshold)
    } else {
        argmax(output)
    }
}

pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub id: ExampleId,
    pub class_index: usize,
    pub probabilities: Vec<f64>,
}

impl Prediction {
    pub fn label(&self, subtask: Subtask) -> Option<Label> {
        subtask.label(self.class_index)
    }
}

/// Eval-mode output of one row.
pub fn predict_row(
    params: &MlpParams,
    arch: &MlpArchitecture,
    x: &[f64],
) -> Result<Vec<f64>, NeuralError> {
    Ok(forward_cached(params, arch, x, None)?.output)
}

pub fn predict(
    params: &MlpParams,
    arch: &MlpArchitecture,
    features: &AlignedFeatures,
    threshold: f64,
) -> Result<Vec<Prediction>, NeuralError> {
    if features.dim_total() != arch.input_dim {
        return Err(NeuralError::DimensionMismatch {
            expected: arch.input_dim,
            found: features.dim_total(),
        });
    }
    features
        .rows()
        .map(|(id, row)| {
            let out = predict_row(params, arch, row)?;
            Ok(Prediction {
                id,
                class_index: decide(&out, threshold),
                probabilities: class_probabilities(&out),
            })
        })
        .collect()
}
