//! Mini-batch Adam training with early stopping on validation MAE.

use super::{
    adam_step, backward_into, forward, mae_loss, AdamState, NetError, NetworkShape, NetworkWeights,
};
use crate::feature_space::SampleSet;
use rand::seq::SliceRandom;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Optimizer and stopping settings. The defaults are conventional Adam and
/// early-stopping values; every field is overridable from study specs.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TrainSettings {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub max_epochs: usize,
    pub patience: usize,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for TrainSettings {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            max_epochs: 500,
            patience: 20,
            batch_size: 32,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_mae: f64,
    pub val_mae: f64,
}

#[derive(Debug, Clone, Default)]
pub struct TrainingTrace {
    pub epochs: Vec<EpochStats>,
    pub best_epoch: usize,
    pub best_val_mae: f64,
}

/// Average MAE of the network over a sample set (scaled units).
pub fn dataset_mae(weights: &NetworkWeights, samples: &SampleSet) -> f64 {
    let mut total = 0.0;
    for row in 0..samples.len() {
        let cache = forward(weights, samples.inputs.row(row));
        total += mae_loss(&cache.output, samples.targets.row(row)).expect("aligned widths");
    }
    total / samples.len() as f64
}

/// Trains from a Glorot single-start. Each epoch shuffles the training rows,
/// applies Adam per mini-batch (gradients averaged over the batch), then
/// evaluates validation MAE; the best-so-far weights are kept and returned
/// when `patience` epochs pass without improvement or `max_epochs` is hit.
pub fn train(
    samples_train: &SampleSet,
    samples_val: &SampleSet,
    shape: NetworkShape,
    settings: &TrainSettings,
) -> Result<(NetworkWeights, TrainingTrace), NetError> {
    train_with_init(
        samples_train,
        samples_val,
        super::glorot_init(shape, settings.seed),
        settings,
    )
}

/// As [`train`] but starting from the given weights (warm start).
pub fn train_with_init(
    samples_train: &SampleSet,
    samples_val: &SampleSet,
    init: NetworkWeights,
    settings: &TrainSettings,
) -> Result<(NetworkWeights, TrainingTrace), NetError> {
    let shape = init.shape;
    if samples_train.is_empty() {
        return Err(NetError::EmptyDataset("training set"));
    }
    if samples_val.is_empty() {
        return Err(NetError::EmptyDataset("validation set"));
    }
    for (set, name) in [(samples_train, "train"), (samples_val, "validation")] {
        if set.inputs.cols() != shape.n_in || set.targets.cols() != shape.n_out {
            return Err(NetError::ShapeMismatch(format!(
                "{name} set is {}x{} -> {} wide, network expects {} -> {}",
                set.len(),
                set.inputs.cols(),
                set.targets.cols(),
                shape.n_in,
                shape.n_out
            )));
        }
    }

    let mut weights = init;
    let mut state = AdamState::new(shape);
    let mut rng = ChaCha8Rng::seed_from_u64(settings.seed.wrapping_add(0x5EED));
    let mut order: Vec<usize> = (0..samples_train.len()).collect();
    let batch_size = settings.batch_size.max(1);

    let mut best_weights = weights.clone();
    let mut best_val = f64::INFINITY;
    let mut best_epoch = 0;
    let mut since_best = 0;
    let mut trace = TrainingTrace::default();
    let mut grads = NetworkWeights::zeros(shape);

    for epoch in 1..=settings.max_epochs {
        order.shuffle(&mut rng);
        let mut train_loss = 0.0;
        for batch in order.chunks(batch_size) {
            grads.fill_zero();
            for &row in batch {
                let cache = forward(&weights, samples_train.inputs.row(row));
                train_loss +=
                    mae_loss(&cache.output, samples_train.targets.row(row)).expect("aligned");
                backward_into(&weights, &cache, samples_train.targets.row(row), &mut grads);
            }
            grads.scale(1.0 / batch.len() as f64);
            adam_step(&mut weights, &grads, &mut state, settings);
        }
        let train_mae = train_loss / samples_train.len() as f64;
        let val_mae = dataset_mae(&weights, samples_val);
        trace.epochs.push(EpochStats {
            epoch,
            train_mae,
            val_mae,
        });

        if val_mae < best_val {
            best_val = val_mae;
            best_epoch = epoch;
            best_weights = weights.clone();
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= settings.patience {
                break;
            }
        }
    }

    trace.best_epoch = best_epoch;
    trace.best_val_mae = best_val;
    Ok((best_weights, trace))
}

impl NetworkWeights {
    pub(super) fn fill_zero(&mut self) {
        for arr in self.param_arrays_mut() {
            arr.fill(0.0);
        }
    }

    pub(super) fn scale(&mut self, s: f64) {
        for arr in self.param_arrays_mut() {
            for v in arr.iter_mut() {
                *v *= s;
            }
        }
    }
}
