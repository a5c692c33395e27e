//! Training loop: Adam over shuffled mini-batches with a temporal
//! train/validation split.
//!
//! One seeded generator drives everything in a fixed order (parameter
//! init first, then each epoch's shuffle), so a (samples, config) pair
//! maps to exactly one weight history on every platform.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::features::{split_index, ModelError, NormStats, TrainingSample};
use super::net::{self, ModelWeights, Tensor};

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub seed: u64,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    /// Earliest fraction of samples to train on; the rest validate.
    pub split_fraction: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            seed: 0,
            epochs: 12,
            batch_size: 64,
            learning_rate: 1e-3,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
            split_fraction: 0.8,
        }
    }
}

/// Mean losses (normalized target space) after one epoch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
}

/// Mean squared error of the network over samples, normalized space.
pub fn mean_loss(w: &ModelWeights, samples: &[TrainingSample]) -> Result<f64, ModelError> {
    if samples.is_empty() {
        return Err(ModelError::EmptyBatch);
    }
    w.validate()?;
    let mut s = net::Scratch::new();
    let mut acc = 0.0;
    for sample in samples {
        let y_hat = net::forward_normalized(w, &sample.x, &mut s)?;
        let y = w.stats.normalize_target(sample.y_ms);
        acc += (y_hat - y) * (y_hat - y);
    }
    Ok(acc / samples.len() as f64)
}

/// Train the fixed architecture on the earliest `split_fraction` of the
/// samples; returns the weights (with `stats` attached) and per-epoch
/// train/validation losses. `epochs == 0` returns the seeded
/// initialization untouched.
pub fn train(
    samples: &[TrainingSample],
    stats: NormStats,
    cfg: &TrainConfig,
) -> Result<(ModelWeights, Vec<EpochStats>), ModelError> {
    assert!(cfg.batch_size >= 1, "batch_size must be >= 1");
    assert!(
        cfg.split_fraction > 0.0 && cfg.split_fraction < 1.0,
        "split_fraction must be in (0, 1)"
    );
    let need = 2 * cfg.batch_size;
    if samples.len() < need {
        return Err(ModelError::TooFewSamples { got: samples.len(), need });
    }

    let k = split_index(samples.len(), cfg.split_fraction);
    let val = &samples[k..];

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut weights = ModelWeights { tensors: net::init_from_rng(&mut rng), stats };

    // Adam state, one pair of moment buffers per tensor.
    let mut m: Vec<Vec<f64>> = weights.tensors.iter().map(|t| vec![0.0; t.data.len()]).collect();
    let mut v: Vec<Vec<f64>> = weights.tensors.iter().map(|t| vec![0.0; t.data.len()]).collect();
    let mut step = 0u32;

    // Shuffled in place each epoch; batches are contiguous runs of it.
    let mut pool: Vec<TrainingSample> = samples[..k].to_vec();
    let mut history = Vec::with_capacity(cfg.epochs);

    for epoch in 1..=cfg.epochs {
        for i in (1..pool.len()).rev() {
            let j = rng.random_range(0..=i);
            pool.swap(i, j);
        }
        let mut loss_sum = 0.0;
        for batch in pool.chunks(cfg.batch_size) {
            let (loss, grads) = net::loss_and_grad(&weights, batch)?;
            loss_sum += loss * batch.len() as f64;
            step += 1;
            adam_step(&mut weights.tensors, &grads, &mut m, &mut v, step, cfg);
        }
        let train_loss = loss_sum / pool.len() as f64;
        let val_loss = mean_loss(&weights, val)?;
        history.push(EpochStats { epoch, train_loss, val_loss });
    }
    Ok((weights, history))
}

fn adam_step(
    tensors: &mut [Tensor],
    grads: &[Tensor],
    m: &mut [Vec<f64>],
    v: &mut [Vec<f64>],
    step: u32,
    cfg: &TrainConfig,
) {
    let b1 = cfg.adam_beta1;
    let b2 = cfg.adam_beta2;
    let bias1 = 1.0 - b1.powi(step as i32);
    let bias2 = 1.0 - b2.powi(step as i32);
    for ((t, g), (mt, vt)) in tensors.iter_mut().zip(grads).zip(m.iter_mut().zip(v.iter_mut())) {
        for i in 0..t.data.len() {
            let gi = g.data[i];
            mt[i] = b1 * mt[i] + (1.0 - b1) * gi;
            vt[i] = b2 * vt[i] + (1.0 - b2) * gi * gi;
            let m_hat = mt[i] / bias1;
            let v_hat = vt[i] / bias2;
            t.data[i] -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.adam_eps);
        }
    }
}
