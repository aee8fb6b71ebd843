//! Feedforward day-ahead forecaster: one or two ReLU hidden layers, linear
//! output, mean-absolute-error objective, Adam with early stopping.

mod io;
mod train;

pub use io::{load_model, save_model, ModelIoError, SavedModel, MODEL_FORMAT_VERSION};
pub use train::{train, train_with_init, EpochStats, TrainSettings, TrainingTrace};

use crate::linalg::Matrix;
use crate::market_data::{Channel, ScalingParams};
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum NetError {
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("empty dataset: {0}")]
    EmptyDataset(&'static str),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
}

/// Layer widths. `n2 = 0` means a single hidden layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkShape {
    pub n_in: usize,
    pub n1: usize,
    pub n2: usize,
    pub n_out: usize,
}

impl NetworkShape {
    pub fn new(n_in: usize, n1: usize, n2: usize, n_out: usize) -> Result<Self, NetError> {
        if n_in == 0 || n1 == 0 || n_out == 0 {
            return Err(NetError::ShapeMismatch(format!(
                "widths must be positive (n_in={n_in}, n1={n1}, n_out={n_out})"
            )));
        }
        Ok(Self {
            n_in,
            n1,
            n2,
            n_out,
        })
    }

    /// Width feeding the output layer.
    pub fn last_hidden(&self) -> usize {
        if self.n2 == 0 {
            self.n1
        } else {
            self.n2
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HiddenLayer {
    pub w: Matrix,
    pub b: Vec<f64>,
}

/// All weight matrices and bias vectors of a forecaster. A single-hidden-
/// layer network carries no second-layer parameters at all.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkWeights {
    pub shape: NetworkShape,
    pub w_in: Matrix,
    pub b_in: Vec<f64>,
    pub hidden: Option<HiddenLayer>,
    pub w_out: Matrix,
    pub b_out: Vec<f64>,
}

impl NetworkWeights {
    pub fn zeros(shape: NetworkShape) -> Self {
        let hidden = (shape.n2 > 0).then(|| HiddenLayer {
            w: Matrix::zeros(shape.n2, shape.n1),
            b: vec![0.0; shape.n2],
        });
        Self {
            shape,
            w_in: Matrix::zeros(shape.n1, shape.n_in),
            b_in: vec![0.0; shape.n1],
            hidden,
            w_out: Matrix::zeros(shape.n_out, shape.last_hidden()),
            b_out: vec![0.0; shape.n_out],
        }
    }

    /// All parameter arrays in a fixed order (weights then bias per layer).
    pub fn param_arrays(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = vec![self.w_in.data(), &self.b_in];
        if let Some(h) = &self.hidden {
            out.push(h.w.data());
            out.push(&h.b);
        }
        out.push(self.w_out.data());
        out.push(&self.b_out);
        out
    }

    pub fn param_arrays_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = vec![self.w_in.data_mut(), &mut self.b_in];
        if let Some(h) = &mut self.hidden {
            out.push(h.w.data_mut());
            out.push(&mut h.b);
        }
        out.push(self.w_out.data_mut());
        out.push(&mut self.b_out);
        out
    }

    pub fn n_params(&self) -> usize {
        self.param_arrays().iter().map(|a| a.len()).sum()
    }
}

fn glorot_bound(fan_in: usize, fan_out: usize) -> f64 {
    (6.0 / (fan_in + fan_out) as f64).sqrt()
}

fn uniform_symmetric(rng: &mut ChaCha8Rng, bound: f64) -> f64 {
    let u = (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
    (2.0 * u - 1.0) * bound
}

/// Glorot-uniform weights, zero biases. Entries of each layer are drawn from
/// `Uniform(+-sqrt(6 / (fan_in + fan_out)))` in row-major order, input layer
/// first, so a seed fully determines the network.
pub fn glorot_init(shape: NetworkShape, seed: u64) -> NetworkWeights {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut weights = NetworkWeights::zeros(shape);

    let b = glorot_bound(shape.n_in, shape.n1);
    for v in weights.w_in.data_mut() {
        *v = uniform_symmetric(&mut rng, b);
    }
    if let Some(h) = &mut weights.hidden {
        let b = glorot_bound(shape.n1, shape.n2);
        for v in h.w.data_mut() {
            *v = uniform_symmetric(&mut rng, b);
        }
    }
    let b = glorot_bound(shape.last_hidden(), shape.n_out);
    for v in weights.w_out.data_mut() {
        *v = uniform_symmetric(&mut rng, b);
    }
    weights
}

/// Intermediate activations kept for the backward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    pub input: Vec<f64>,
    pub pre1: Vec<f64>,
    pub act1: Vec<f64>,
    pub pre2: Vec<f64>,
    pub act2: Vec<f64>,
    pub output: Vec<f64>,
}

#[inline]
fn relu(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        0.0
    }
}

/// Evaluates the network: `z1 = relu(W_in x + b_in)`, optionally
/// `z2 = relu(W_h z1 + b_h)`, linear output `W_out z + b_out`.
pub fn forward(weights: &NetworkWeights, x: &[f64]) -> ForwardCache {
    let shape = weights.shape;
    assert_eq!(x.len(), shape.n_in, "input width mismatch");

    let mut pre1 = vec![0.0; shape.n1];
    weights.w_in.matvec(x, &mut pre1);
    for (p, b) in pre1.iter_mut().zip(&weights.b_in) {
        *p += b;
    }
    let act1: Vec<f64> = pre1.iter().map(|&v| relu(v)).collect();

    let (pre2, act2) = match &weights.hidden {
        Some(h) => {
            let mut pre2 = vec![0.0; shape.n2];
            h.w.matvec(&act1, &mut pre2);
            for (p, b) in pre2.iter_mut().zip(&h.b) {
                *p += b;
            }
            let act2: Vec<f64> = pre2.iter().map(|&v| relu(v)).collect();
            (pre2, act2)
        }
        None => (Vec::new(), Vec::new()),
    };

    let last = if shape.n2 > 0 { &act2 } else { &act1 };
    let mut output = vec![0.0; shape.n_out];
    weights.w_out.matvec(last, &mut output);
    for (o, b) in output.iter_mut().zip(&weights.b_out) {
        *o += b;
    }

    ForwardCache {
        input: x.to_vec(),
        pre1,
        act1,
        pre2,
        act2,
        output,
    }
}

/// Mean absolute error over one output vector.
pub fn mae_loss(pred: &[f64], target: &[f64]) -> Result<f64, NetError> {
    if pred.len() != target.len() {
        return Err(NetError::LengthMismatch {
            expected: target.len(),
            got: pred.len(),
        });
    }
    let n = pred.len() as f64;
    Ok(pred
        .iter()
        .zip(target)
        .map(|(p, t)| (p - t).abs())
        .sum::<f64>()
        / n)
}

/// Subgradient of the MAE w.r.t. the prediction, with `sign(0) = 0`.
pub fn mae_gradient(pred: &[f64], target: &[f64]) -> Result<Vec<f64>, NetError> {
    if pred.len() != target.len() {
        return Err(NetError::LengthMismatch {
            expected: target.len(),
            got: pred.len(),
        });
    }
    let n = pred.len() as f64;
    Ok(pred
        .iter()
        .zip(target)
        .map(|(p, t)| {
            let d = p - t;
            if d > 0.0 {
                1.0 / n
            } else if d < 0.0 {
                -1.0 / n
            } else {
                0.0
            }
        })
        .collect())
}

/// Accumulates exact reverse-mode gradients of the single-sample MAE loss
/// into `grads` (which must have the same shape as `weights`).
pub fn backward_into(
    weights: &NetworkWeights,
    cache: &ForwardCache,
    target: &[f64],
    grads: &mut NetworkWeights,
) {
    let shape = weights.shape;
    let delta_out = mae_gradient(&cache.output, target).expect("target width mismatch");

    let last_act = if shape.n2 > 0 {
        &cache.act2
    } else {
        &cache.act1
    };
    grads.w_out.add_outer(1.0, &delta_out, last_act);
    for (g, d) in grads.b_out.iter_mut().zip(&delta_out) {
        *g += d;
    }

    let mut delta_last = vec![0.0; shape.last_hidden()];
    weights.w_out.matvec_transpose(&delta_out, &mut delta_last);

    let delta1 = if let Some(h) = &weights.hidden {
        for (d, p) in delta_last.iter_mut().zip(&cache.pre2) {
            if *p <= 0.0 {
                *d = 0.0;
            }
        }
        let gh = grads.hidden.as_mut().expect("gradient shape mismatch");
        gh.w.add_outer(1.0, &delta_last, &cache.act1);
        for (g, d) in gh.b.iter_mut().zip(&delta_last) {
            *g += d;
        }
        let mut delta1 = vec![0.0; shape.n1];
        h.w.matvec_transpose(&delta_last, &mut delta1);
        delta1
    } else {
        delta_last
    };

    let mut delta1 = delta1;
    for (d, p) in delta1.iter_mut().zip(&cache.pre1) {
        if *p <= 0.0 {
            *d = 0.0;
        }
    }
    grads.w_in.add_outer(1.0, &delta1, &cache.input);
    for (g, d) in grads.b_in.iter_mut().zip(&delta1) {
        *g += d;
    }
}

/// Convenience wrapper returning fresh gradients for one sample.
pub fn backward(weights: &NetworkWeights, cache: &ForwardCache, target: &[f64]) -> NetworkWeights {
    let mut grads = NetworkWeights::zeros(weights.shape);
    backward_into(weights, cache, target, &mut grads);
    grads
}

/// Adam first/second moment state.
#[derive(Debug, Clone)]
pub struct AdamState {
    pub m: NetworkWeights,
    pub v: NetworkWeights,
    pub t: u64,
}

impl AdamState {
    pub fn new(shape: NetworkShape) -> Self {
        Self {
            m: NetworkWeights::zeros(shape),
            v: NetworkWeights::zeros(shape),
            t: 0,
        }
    }
}

/// One bias-corrected Adam update on a flat parameter array.
#[allow(clippy::too_many_arguments)]
pub fn adam_update(
    params: &mut [f64],
    grads: &[f64],
    m: &mut [f64],
    v: &mut [f64],
    t: u64,
    rate: f64,
    beta1: f64,
    beta2: f64,
    epsilon: f64,
) {
    let bc1 = 1.0 - beta1.powi(t as i32);
    let bc2 = 1.0 - beta2.powi(t as i32);
    for i in 0..params.len() {
        let g = grads[i];
        m[i] = beta1 * m[i] + (1.0 - beta1) * g;
        v[i] = beta2 * v[i] + (1.0 - beta2) * g * g;
        let m_hat = m[i] / bc1;
        let v_hat = v[i] / bc2;
        params[i] -= rate * m_hat / (v_hat.sqrt() + epsilon);
    }
}

/// Applies one Adam step to every parameter of the network.
pub fn adam_step(
    weights: &mut NetworkWeights,
    grads: &NetworkWeights,
    state: &mut AdamState,
    settings: &TrainSettings,
) {
    state.t += 1;
    let t = state.t;
    let g_arrays = grads.param_arrays();
    let mut w_arrays = weights.param_arrays_mut();
    let mut m_arrays = state.m.param_arrays_mut();
    let mut v_arrays = state.v.param_arrays_mut();
    for i in 0..g_arrays.len() {
        adam_update(
            w_arrays[i],
            g_arrays[i],
            m_arrays[i],
            v_arrays[i],
            t,
            settings.learning_rate,
            settings.beta1,
            settings.beta2,
            settings.epsilon,
        );
    }
}

/// Forward pass plus per-channel inverse scaling: the first 24 outputs are
/// local-market prices; a 48-wide network appends the neighbour market.
pub fn predict_day(weights: &NetworkWeights, x: &[f64], scaler: &ScalingParams) -> Vec<f64> {
    let cache = forward(weights, x);
    cache
        .output
        .iter()
        .enumerate()
        .map(|(i, &y)| {
            let ch = if i < 24 {
                Channel::PriceB
            } else {
                Channel::PriceF
            };
            scaler.invert(ch, y)
        })
        .collect()
}
