use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{
    accumulate_gradients, adam_step, decide, forward_cached, init_params, predict_row,
    weighted_loss, AdamConfig, AdamState, MlpArchitecture, MlpParams, NeuralError,
};
use crate::features::AlignedFeatures;
use crate::metrics::macro_f1_indices;
use crate::types::ExampleId;

/// Dense row-major inputs with class-index targets.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    dim: usize,
    ids: Vec<ExampleId>,
    inputs: Vec<f64>,
    targets: Vec<usize>,
}

impl Dataset {
    /// Ids default to `0..n`.
    pub fn new(dim: usize, inputs: Vec<f64>, targets: Vec<usize>) -> Result<Self, NeuralError> {
        let ids = (0..targets.len() as u64).collect();
        Self::with_ids(dim, ids, inputs, targets)
    }

    pub fn with_ids(
        dim: usize,
        ids: Vec<ExampleId>,
        inputs: Vec<f64>,
        targets: Vec<usize>,
    ) -> Result<Self, NeuralError> {
        if dim == 0 || inputs.len() != dim * targets.len() || ids.len() != targets.len() {
            return Err(NeuralError::ShapeMismatch);
        }
        Ok(Dataset {
            dim,
            ids,
            inputs,
            targets,
        })
    }

    /// Rows of `aligned` whose id has a label; unlabeled rows are skipped.
    pub fn from_aligned(
        aligned: &AlignedFeatures,
        labels: &HashMap<ExampleId, usize>,
    ) -> Result<Self, NeuralError> {
        let dim = aligned.dim_total();
        let mut ids = Vec::new();
        let mut inputs = Vec::new();
        let mut targets = Vec::new();
        for (id, row) in aligned.rows() {
            if let Some(&t) = labels.get(&id) {
                ids.push(id);
                inputs.extend_from_slice(row);
                targets.push(t);
            }
        }
        Self::with_ids(dim, ids, inputs, targets)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn ids(&self) -> &[ExampleId] {
        &self.ids
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.inputs[i * self.dim..(i + 1) * self.dim]
    }

    pub fn targets(&self) -> &[usize] {
        &self.targets
    }

    pub fn subset(&self, indices: &[usize]) -> Dataset {
        let mut inputs = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            inputs.extend_from_slice(self.row(i));
        }
        Dataset {
            dim: self.dim,
            ids: indices.iter().map(|&i| self.ids[i]).collect(),
            inputs,
            targets: indices.iter().map(|&i| self.targets[i]).collect(),
        }
    }

    fn check(&self, arch: &MlpArchitecture, which: &'static str) -> Result<(), NeuralError> {
        if self.is_empty() {
            return Err(NeuralError::EmptyDataset(which));
        }
        if self.dim != arch.input_dim {
            return Err(NeuralError::DimensionMismatch {
                expected: arch.input_dim,
                found: self.dim,
            });
        }
        let k = arch.num_classes();
        if let Some(&bad) = self.targets.iter().find(|&&t| t >= k) {
            return Err(NeuralError::LabelOutOfRange {
                label: bad,
                num_classes: k,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub max_epochs: usize,
    pub batch_size: usize,
    pub patience: usize,
    pub seed: u64,
    pub decision_threshold: f64,
    pub adam: AdamConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            max_epochs: 50,
            batch_size: 32,
            patience: 3,
            seed: 0,
            decision_threshold: 0.5,
            adam: AdamConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), NeuralError> {
        let bad = |m: &str| Err(NeuralError::InvalidConfig(m.to_string()));
        if self.max_epochs == 0 {
            return bad("max_epochs must be at least 1");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be at least 1");
        }
        if self.patience == 0 {
            return bad("patience must be at least 1");
        }
        if !(self.decision_threshold > 0.0 && self.decision_threshold < 1.0) {
            return bad("decision_threshold must lie in (0, 1)");
        }
        self.adam.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_macro_f1: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Parameters from the best validation epoch.
    pub params: MlpParams,
    pub history: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub best_val_macro_f1: f64,
    pub stopped_early: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopDecision {
    Continue,
    Stop,
}

/// Tracks the best score seen and stops after `patience` epochs without a
/// strict improvement.
#[derive(Debug, Clone)]
pub struct EarlyStopping<T> {
    patience: usize,
    best: Option<(usize, f64, T)>,
    since_best: usize,
}

impl<T> EarlyStopping<T> {
    pub fn new(patience: usize) -> Self {
        EarlyStopping {
            patience,
            best: None,
            since_best: 0,
        }
    }

    /// `snapshot` is only called when `score` is a new best.
    pub fn observe(
        &mut self,
        epoch: usize,
        score: f64,
        snapshot: impl FnOnce() -> T,
    ) -> StopDecision {
        let improved = match &self.best {
            None => true,
            Some((_, best, _)) => score > *best,
        };
        if improved && !score.is_nan() {
            self.best = Some((epoch, score, snapshot()));
            self.since_best = 0;
        } else {
            self.since_best += 1;
        }
        if self.since_best >= self.patience {
            StopDecision::Stop
        } else {
            StopDecision::Continue
        }
    }

    pub fn best_epoch(&self) -> Option<usize> {
        self.best.as_ref().map(|b| b.0)
    }

    pub fn best_score(&self) -> Option<f64> {
        self.best.as_ref().map(|b| b.1)
    }

    pub fn into_best(self) -> Option<(usize, f64, T)> {
        self.best
    }
}

fn check_weights(arch: &MlpArchitecture, class_weights: &[f64]) -> Result<(), NeuralError> {
    if class_weights.len() != arch.num_classes() {
        return Err(NeuralError::WeightCount {
            expected: arch.num_classes(),
            found: class_weights.len(),
        });
    }
    if class_weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
        return Err(NeuralError::InvalidConfig(
            "class weights must be positive and finite".into(),
        ));
    }
    Ok(())
}

/// Eval-mode weighted loss of `indices`: `sum(w_i * l_i) / sum(w_i)`.
pub fn weighted_batch_loss(
    params: &MlpParams,
    arch: &MlpArchitecture,
    data: &Dataset,
    indices: &[usize],
    class_weights: &[f64],
) -> Result<f64, NeuralError> {
    check_weights(arch, class_weights)?;
    let mut total = 0.0;
    let mut weight_sum = 0.0;
    for &i in indices {
        let t = data.targets[i];
        let out = predict_row(params, arch, data.row(i))?;
        total += weighted_loss(&out, t, class_weights[t]);
        weight_sum += class_weights[t];
    }
    Ok(total / weight_sum)
}

pub fn evaluate_macro_f1(
    params: &MlpParams,
    arch: &MlpArchitecture,
    data: &Dataset,
    threshold: f64,
) -> Result<f64, NeuralError> {
    let mut pred = Vec::with_capacity(data.len());
    for i in 0..data.len() {
        pred.push(decide(&predict_row(params, arch, data.row(i))?, threshold));
    }
    macro_f1_indices(arch.num_classes(), &data.targets, &pred)
        .map_err(|_| NeuralError::ShapeMismatch)
}

/// Mini-batch Adam on the class-weighted loss with early stopping on
/// validation macro F1, starting from Glorot-initialized weights seeded by
/// `config.seed`. Returns the best-epoch parameters.
pub fn train(
    arch: &MlpArchitecture,
    train_data: &Dataset,
    val_data: &Dataset,
    class_weights: &[f64],
    config: &TrainConfig,
) -> Result<TrainOutcome, NeuralError> {
    train_from(
        init_params(arch, config.seed),
        arch,
        train_data,
        val_data,
        class_weights,
        config,
    )
}

/// [`train`] from caller-supplied starting parameters.
pub fn train_from(
    initial: MlpParams,
    arch: &MlpArchitecture,
    train_data: &Dataset,
    val_data: &Dataset,
    class_weights: &[f64],
    config: &TrainConfig,
) -> Result<TrainOutcome, NeuralError> {
    arch.validate()?;
    config.validate()?;
    train_data.check(arch, "training")?;
    val_data.check(arch, "validation")?;
    check_weights(arch, class_weights)?;
    if !initial.fits(arch) {
        return Err(NeuralError::ShapeMismatch);
    }

    let mut params = initial;
    let mut adam = AdamState::new(&params, config.adam);
    // Separate stream from the initializer, shared by shuffling and dropout.
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x9e37_79b9_7f4a_7c15);
    let mut order: Vec<usize> = (0..train_data.len()).collect();
    let mut grads = MlpParams::zeros(arch);
    let mut stopper = EarlyStopping::new(config.patience);
    let mut history = Vec::new();
    let mut stopped_early = false;

    for epoch in 1..=config.max_epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        let mut epoch_weight = 0.0;
        for (b, batch) in order.chunks(config.batch_size).enumerate() {
            grads.fill(0.0);
            let mut batch_loss = 0.0;
            let mut batch_weight = 0.0;
            for &i in batch {
                let t = train_data.targets[i];
                let w = class_weights[t];
                let cache = forward_cached(&params, arch, train_data.row(i), Some(&mut rng))?;
                batch_loss += weighted_loss(cache.output(), t, w);
                batch_weight += w;
                accumulate_gradients(&params, &cache, t, w, &mut grads);
            }
            if !batch_loss.is_finite() {
                return Err(NeuralError::NonFiniteLoss {
                    epoch,
                    batch: b + 1,
                });
            }
            grads.scale(1.0 / batch_weight);
            adam_step(&mut params, &grads, &mut adam)?;
            if !params.is_finite() {
                return Err(NeuralError::NonFiniteLoss {
                    epoch,
                    batch: b + 1,
                });
            }
            epoch_loss += batch_loss;
            epoch_weight += batch_weight;
        }
        let val_macro_f1 = evaluate_macro_f1(&params, arch, val_data, config.decision_threshold)?;
        history.push(EpochRecord {
            epoch,
            train_loss: epoch_loss / epoch_weight,
            val_macro_f1,
        });
        log::debug!(
            "epoch {epoch}: loss {:.6} val macro F1 {val_macro_f1:.4}",
            epoch_loss / epoch_weight
        );
        if stopper.observe(epoch, val_macro_f1, || params.clone()) == StopDecision::Stop {
            stopped_early = epoch < config.max_epochs;
            break;
        }
    }

    let (best_epoch, best_val_macro_f1, best) =
        stopper.into_best().expect("at least one epoch ran");
    Ok(TrainOutcome {
        params: best,
        history,
        best_epoch,
        best_val_macro_f1,
        stopped_early,
    })
}
