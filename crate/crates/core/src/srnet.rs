//! The overfitted super-resolution network: one hidden layer with a sine
//! activation, sigmoid outputs, binary cross-entropy loss, analytic
//! backpropagation and an Adam loop.
//!
//! Everything here is 32-bit and single-threaded on purpose: the trained
//! parameters become part of the bitstream, so training must be reproducible
//! bit-for-bit from the seed. Transcendentals go through `libm` (a pure-Rust
//! port) instead of the platform math library for the same reason.

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::patterns::InterpolationPatterns;
use crate::rng::Rng;

/// Output dimension: the 8 candidate children of a parent voxel.
pub const OUT_DIM: usize = 8;

/// Values are clamped to this magnitude after every optimizer step so the
/// binary16 quantizer always sees finite, in-range inputs.
pub const PARAM_CLAMP: f32 = 65504.0;

const PROB_FLOOR: f32 = 1e-7;

/// Weights and biases of the one-hidden-layer network, all `f32`.
///
/// Layouts: `w1` is `hidden x in_dim` row-major, `w2` is `8 x hidden`
/// row-major. The flat serialization order is `w1, b1, w2, b2`.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpParams {
    pub in_dim: usize,
    pub hidden: usize,
    pub w1: Vec<f32>,
    pub b1: Vec<f32>,
    pub w2: Vec<f32>,
    pub b2: Vec<f32>,
}

impl MlpParams {
    pub fn zeros(in_dim: usize, hidden: usize) -> Self {
        MlpParams {
            in_dim,
            hidden,
            w1: vec![0.0; hidden * in_dim],
            b1: vec![0.0; hidden],
            w2: vec![0.0; OUT_DIM * hidden],
            b2: vec![0.0; OUT_DIM],
        }
    }

    pub fn param_count(&self) -> usize {
        self.in_dim * self.hidden + self.hidden + OUT_DIM * self.hidden + OUT_DIM
    }

    /// Concatenates all parameters in serialization order.
    pub fn to_flat(&self) -> Vec<f32> {
        let mut flat = Vec::with_capacity(self.param_count());
        flat.extend_from_slice(&self.w1);
        flat.extend_from_slice(&self.b1);
        flat.extend_from_slice(&self.w2);
        flat.extend_from_slice(&self.b2);
        flat
    }

    pub fn from_flat(in_dim: usize, hidden: usize, flat: &[f32]) -> Result<Self> {
        let mut p = MlpParams::zeros(in_dim, hidden);
        if flat.len() != p.param_count() {
            return Err(Error::LengthMismatch {
                expected: p.param_count(),
                got: flat.len(),
            });
        }
        let (w1, rest) = flat.split_at(hidden * in_dim);
        let (b1, rest) = rest.split_at(hidden);
        let (w2, b2) = rest.split_at(OUT_DIM * hidden);
        p.w1.copy_from_slice(w1);
        p.b1.copy_from_slice(b1);
        p.w2.copy_from_slice(w2);
        p.b2.copy_from_slice(b2);
        Ok(p)
    }

}

/// Optimizer and loop hyperparameters.
#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub learning_rate: f32,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    pub beta1: f32,
    pub beta2: f32,
    pub eps_adam: f32,
    /// Frequency scale of the sine activation. The pipeline folds any value
    /// other than 1 into the first-layer weights before quantization.
    pub omega0: f32,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.001,
            batch_size: 2048,
            epochs: 150,
            seed: 0,
            beta1: 0.9,
            beta2: 0.999,
            eps_adam: 1e-8,
            omega0: 1.0,
        }
    }
}

/// Fresh parameters drawn uniformly from `+-sqrt(6 / fan_in)` per layer.
///
/// Draw order (one generator stream): `w1` row-major, `b1`, `w2` row-major,
/// `b2`. [`train`] reuses this exact sequence before its epoch shuffles.
pub fn init_params(seed: u64, in_dim: usize, hidden: usize) -> MlpParams {
    let mut rng = Rng::new(seed);
    init_with_rng(&mut rng, in_dim, hidden)
}

pub(crate) fn init_with_rng(rng: &mut Rng, in_dim: usize, hidden: usize) -> MlpParams {
    assert!(in_dim >= 1, "input dimension must be positive");
    assert!((1..=64).contains(&hidden), "hidden size must be in [1, 64]");
    let mut p = MlpParams::zeros(in_dim, hidden);
    let lim1 = (6.0_f32 / in_dim as f32).sqrt();
    let lim2 = (6.0_f32 / hidden as f32).sqrt();
    p.w1.iter_mut().for_each(|w| *w = rng.uniform_symmetric(lim1));
    p.b1.iter_mut().for_each(|w| *w = rng.uniform_symmetric(lim1));
    p.w2.iter_mut().for_each(|w| *w = rng.uniform_symmetric(lim2));
    p.b2.iter_mut().for_each(|w| *w = rng.uniform_symmetric(lim2));
    p
}

#[inline]
fn sigmoid(z: f32) -> f32 {
    if z >= 0.0 {
        1.0 / (1.0 + libm::expf(-z))
    } else {
        let e = libm::expf(z);
        e / (1.0 + e)
    }
}

#[inline]
fn clamp_prob(p: f32) -> f32 {
    p.clamp(PROB_FLOOR, 1.0 - PROB_FLOOR)
}

/// One forward pass: `p = sigmoid(W2 sin(omega0 (W1 x + b1)) + b2)`.
/// Outputs are clamped to the open unit interval.
pub fn forward(params: &MlpParams, row: &[u8], omega0: f32) -> Result<[f32; OUT_DIM]> {
    if row.len() != params.in_dim {
        return Err(Error::DimMismatch {
            expected: params.in_dim,
            got: row.len(),
        });
    }
    let mut hidden = vec![0.0f32; params.hidden];
    hidden_pre_activations(params, row, &mut hidden);
    for z in hidden.iter_mut() {
        *z = libm::sinf(omega0 * *z);
    }
    Ok(output_probs(params, &hidden))
}

/// `z1 = W1 x + b1` for a binary row: sums the columns whose input bit is set.
#[inline]
fn hidden_pre_activations(params: &MlpParams, row: &[u8], z1: &mut [f32]) {
    z1.copy_from_slice(&params.b1);
    for (i, &x) in row.iter().enumerate() {
        if x != 0 {
            for (h, z) in z1.iter_mut().enumerate() {
                *z += params.w1[h * params.in_dim + i];
            }
        }
    }
}

#[inline]
fn output_probs(params: &MlpParams, h: &[f32]) -> [f32; OUT_DIM] {
    let mut probs = [0.0f32; OUT_DIM];
    for (k, p) in probs.iter_mut().enumerate() {
        let mut z = params.b2[k];
        let w2row = &params.w2[k * params.hidden..(k + 1) * params.hidden];
        for (w, hv) in w2row.iter().zip(h) {
            z += w * hv;
        }
        *p = clamp_prob(sigmoid(z));
    }
    probs
}

/// Thresholds the 8 probabilities into a child mask: bit `k` set when
/// `p_k >= 0.5`. A zero mask falls back to the single most likely child
/// (lowest index on ties) so every parent keeps at least one point.
pub fn predict_pattern(probs: &[f32; OUT_DIM]) -> u8 {
    let mut mask = 0u8;
    for (k, &p) in probs.iter().enumerate() {
        if p >= 0.5 {
            mask |= 1 << k;
        }
    }
    if mask == 0 {
        let mut best = 0;
        for k in 1..OUT_DIM {
            if probs[k] > probs[best] {
                best = k;
            }
        }
        mask = 1 << best;
    }
    mask
}

/// Runs the network over every row and thresholds the outputs.
pub fn predict_masks(
    params: &MlpParams,
    features: &FeatureMatrix,
    omega0: f32,
) -> Result<InterpolationPatterns> {
    let mut masks = Vec::with_capacity(features.rows());
    for row in features.iter_rows() {
        let probs = forward(params, row, omega0)?;
        masks.push(predict_pattern(&probs));
    }
    Ok(InterpolationPatterns::new(masks))
}

/// Mean binary cross-entropy over the batch and the 8 children, plus the
/// analytic gradient of that mean.
///
/// The loss is `-(1 / (8 B)) sum_j sum_k [t log p + (1 - t) log(1 - p)]` with
/// probabilities clamped away from 0 and 1 before the logs. The backward pass
/// uses the exact sigmoid/cross-entropy composition `p - t`, then
/// `omega0 cos(omega0 z1)` through the sine layer.
pub fn loss_and_grad(
    params: &MlpParams,
    features: &FeatureMatrix,
    masks: &[u8],
    batch: &[usize],
    omega0: f32,
) -> (f32, MlpParams) {
    assert!(!batch.is_empty(), "batch must be non-empty");
    let in_dim = params.in_dim;
    let hidden = params.hidden;
    let mut grad = MlpParams::zeros(in_dim, hidden);
    let scale = 1.0f32 / (OUT_DIM * batch.len()) as f32;

    let mut z1 = vec![0.0f32; hidden];
    let mut h = vec![0.0f32; hidden];
    let mut dz1 = vec![0.0f32; hidden];
    let mut loss_sum = 0.0f64;

    for &j in batch {
        let row = features.row(j);
        let mask = masks[j];
        hidden_pre_activations(params, row, &mut z1);
        for (hv, &z) in h.iter_mut().zip(z1.iter()) {
            *hv = libm::sinf(omega0 * z);
        }
        let probs = output_probs(params, &h);

        dz1.iter_mut().for_each(|d| *d = 0.0);
        for k in 0..OUT_DIM {
            let t = ((mask >> k) & 1) as f32;
            let p = probs[k];
            loss_sum -= (t as f64) * (libm::logf(p) as f64)
                + ((1.0 - t) as f64) * (libm::logf(1.0 - p) as f64);
            let dz2 = (p - t) * scale;
            grad.b2[k] += dz2;
            let w2row = &params.w2[k * hidden..(k + 1) * hidden];
            let gw2row = &mut grad.w2[k * hidden..(k + 1) * hidden];
            for hh in 0..hidden {
                gw2row[hh] += dz2 * h[hh];
                dz1[hh] += dz2 * w2row[hh];
            }
        }
        for hh in 0..hidden {
            let d = dz1[hh] * omega0 * libm::cosf(omega0 * z1[hh]);
            dz1[hh] = d;
            grad.b1[hh] += d;
        }
        for (i, &x) in row.iter().enumerate() {
            if x != 0 {
                for hh in 0..hidden {
                    grad.w1[hh * in_dim + i] += dz1[hh];
                }
            }
        }
    }

    ((loss_sum / (OUT_DIM * batch.len()) as f64) as f32, grad)
}

/// Final parameters plus the per-epoch mean loss trace.
#[derive(Debug, Clone)]
pub struct TrainRun {
    pub params: MlpParams,
    pub epoch_loss: Vec<f32>,
}

/// Overfits the network to one (features, patterns) pair.
///
/// Deterministic given the config: one generator stream seeded with
/// `config.seed` first draws the initial parameters, then produces the epoch
/// shuffles. Batches walk the shuffled index list in order; the last batch of
/// an epoch may be short. Parameters are clamped to the binary16 range after
/// every step.
pub fn train(
    features: &FeatureMatrix,
    patterns: &InterpolationPatterns,
    hidden: usize,
    config: &TrainConfig,
) -> Result<MlpParams> {
    Ok(train_full(features, patterns, hidden, config)?.params)
}

pub fn train_full(
    features: &FeatureMatrix,
    patterns: &InterpolationPatterns,
    hidden: usize,
    config: &TrainConfig,
) -> Result<TrainRun> {
    let rows = features.rows();
    if rows == 0 {
        return Err(Error::EmptyTrainingSet);
    }
    if patterns.len() != rows {
        return Err(Error::LengthMismatch {
            expected: rows,
            got: patterns.len(),
        });
    }
    assert!(config.batch_size >= 1 && config.epochs >= 1 && config.learning_rate > 0.0);

    let mut rng = Rng::new(config.seed);
    let mut params = init_with_rng(&mut rng, features.width(), hidden);
    let masks = patterns.masks();

    let mut m = MlpParams::zeros(params.in_dim, hidden);
    let mut v = MlpParams::zeros(params.in_dim, hidden);
    let mut beta1_pow = 1.0f32;
    let mut beta2_pow = 1.0f32;

    let mut indices: Vec<usize> = (0..rows).collect();
    let mut epoch_loss = Vec::with_capacity(config.epochs);

    for _ in 0..config.epochs {
        rng.shuffle(&mut indices);
        let mut loss_sum = 0.0f64;
        for batch in indices.chunks(config.batch_size) {
            let (loss, grad) = loss_and_grad(&params, features, masks, batch, config.omega0);
            loss_sum += loss as f64 * batch.len() as f64;
            beta1_pow *= config.beta1;
            beta2_pow *= config.beta2;
            adam_step(
                &mut params, &mut m, &mut v, &grad, config, beta1_pow, beta2_pow,
            );
        }
        epoch_loss.push((loss_sum / rows as f64) as f32);
    }

    Ok(TrainRun { params, epoch_loss })
}

fn adam_step(
    params: &mut MlpParams,
    m: &mut MlpParams,
    v: &mut MlpParams,
    grad: &MlpParams,
    config: &TrainConfig,
    beta1_pow: f32,
    beta2_pow: f32,
) {
    let corr1 = 1.0 - beta1_pow;
    let corr2 = 1.0 - beta2_pow;
    let update = |p: &mut [f32], m: &mut [f32], v: &mut [f32], g: &[f32]| {
        for i in 0..p.len() {
            m[i] = config.beta1 * m[i] + (1.0 - config.beta1) * g[i];
            v[i] = config.beta2 * v[i] + (1.0 - config.beta2) * g[i] * g[i];
            let mhat = m[i] / corr1;
            let vhat = v[i] / corr2;
            p[i] -= config.learning_rate * mhat / (vhat.sqrt() + config.eps_adam);
            p[i] = p[i].clamp(-PARAM_CLAMP, PARAM_CLAMP);
        }
    };
    update(&mut params.w1, &mut m.w1, &mut v.w1, &grad.w1);
    update(&mut params.b1, &mut m.b1, &mut v.b1, &grad.b1);
    update(&mut params.w2, &mut m.w2, &mut v.w2, &grad.w2);
    update(&mut params.b2, &mut m.b2, &mut v.b2, &grad.b2);
}
