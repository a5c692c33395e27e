//! The error-regression network and its gradients, hand-rolled on flat
//! f64 buffers.
//!
//! Architecture (fixed): Conv1D(3→16, k5, same) → ReLU → Conv1D(16→32,
//! k5, same) → ReLU → MaxPool(2) → Conv1D(32→32, k3, same) → ReLU →
//! global average pool → Dense(32→32) → ReLU → Dense(32→1). Input is a
//! normalized `[3, 64]` window; output is denormalized to milliseconds
//! with the statistics carried in the weights.
//!
//! Convolutions run as shifted axpy/dot passes over contiguous rows
//! rather than per-position gathers; on one core that is the difference
//! between minutes and seconds per training epoch.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::features::{ModelError, NormStats, TrainingSample, INPUT_LEN, WIDTH};

/// A named parameter array with an explicit shape, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

impl Tensor {
    pub fn zeros(name: &str, shape: &[usize]) -> Tensor {
        let len = shape.iter().product();
        Tensor { name: name.to_string(), shape: shape.to_vec(), data: vec![0.0; len] }
    }
}

/// Tensor layout of the fixed architecture, in parameter order.
pub const TENSOR_SPECS: [(&str, &[usize]); 10] = [
    ("conv1.w", &[16, 3, 5]),
    ("conv1.b", &[16]),
    ("conv2.w", &[32, 16, 5]),
    ("conv2.b", &[32]),
    ("conv3.w", &[32, 32, 3]),
    ("conv3.b", &[32]),
    ("dense1.w", &[32, 32]),
    ("dense1.b", &[32]),
    ("dense2.w", &[1, 32]),
    ("dense2.b", &[1]),
];

/// Fan-in backing the init scale of each tensor (biases share their
/// layer's fan-in).
const FAN_IN: [usize; 10] = [15, 15, 80, 80, 96, 96, 32, 32, 32, 32];

const C1_W: usize = 0;
const C1_B: usize = 1;
const C2_W: usize = 2;
const C2_B: usize = 3;
const C3_W: usize = 4;
const C3_B: usize = 5;
const D1_W: usize = 6;
const D1_B: usize = 7;
const D2_W: usize = 8;
const D2_B: usize = 9;

const POOLED: usize = WIDTH / 2;

/// Parameters plus the normalization that makes them meaningful.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelWeights {
    pub tensors: Vec<Tensor>,
    pub stats: NormStats,
}

impl ModelWeights {
    /// All-zero parameters (identity statistics).
    pub fn zeros() -> ModelWeights {
        ModelWeights {
            tensors: TENSOR_SPECS.iter().map(|(n, s)| Tensor::zeros(n, s)).collect(),
            stats: NormStats::identity(),
        }
    }

    /// Check names and shapes against the fixed architecture.
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.tensors.len() != TENSOR_SPECS.len() {
            return Err(ModelError::ShapeMismatch {
                expected: format!("{} tensors", TENSOR_SPECS.len()),
                got: format!("{} tensors", self.tensors.len()),
            });
        }
        for (t, (name, shape)) in self.tensors.iter().zip(TENSOR_SPECS.iter()) {
            let len: usize = shape.iter().product();
            if t.name != *name || t.shape != *shape || t.data.len() != len {
                return Err(ModelError::ShapeMismatch {
                    expected: format!("{} {:?}", name, shape),
                    got: format!("{} {:?} ({} values)", t.name, t.shape, t.data.len()),
                });
            }
        }
        Ok(())
    }

    pub fn param_count(&self) -> usize {
        self.tensors.iter().map(|t| t.data.len()).sum()
    }
}

/// Draw one architecture's worth of parameters from `rng`: uniform in
/// [-k, k], k = sqrt(1/fan_in).
pub fn init_from_rng(rng: &mut ChaCha8Rng) -> Vec<Tensor> {
    TENSOR_SPECS
        .iter()
        .zip(FAN_IN.iter())
        .map(|((name, shape), fan_in)| {
            let k = (1.0 / *fan_in as f64).sqrt();
            let mut t = Tensor::zeros(name, shape);
            for v in &mut t.data {
                *v = rng.random::<f64>() * 2.0 * k - k;
            }
            t
        })
        .collect()
}

/// Seeded initialization with identity statistics (training replaces the
/// statistics with the dataset's).
pub fn init_weights(seed: u64) -> ModelWeights {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    ModelWeights { tensors: init_from_rng(&mut rng), stats: NormStats::identity() }
}

/// Per-layer activations of one forward pass, kept for backprop.
pub struct Scratch {
    z1: Vec<f64>,
    a1: Vec<f64>,
    z2: Vec<f64>,
    a2: Vec<f64>,
    pool: Vec<f64>,
    arg: Vec<usize>,
    z3: Vec<f64>,
    a3: Vec<f64>,
    gap: Vec<f64>,
    zd1: Vec<f64>,
    ad1: Vec<f64>,
    // Gradient buffers, reused across samples.
    d1: Vec<f64>,
    d2: Vec<f64>,
    d3: Vec<f64>,
    dpool: Vec<f64>,
    dgap: Vec<f64>,
    dd1: Vec<f64>,
}

impl Scratch {
    pub fn new() -> Scratch {
        Scratch {
            z1: vec![0.0; 16 * WIDTH],
            a1: vec![0.0; 16 * WIDTH],
            z2: vec![0.0; 32 * WIDTH],
            a2: vec![0.0; 32 * WIDTH],
            pool: vec![0.0; 32 * POOLED],
            arg: vec![0; 32 * POOLED],
            z3: vec![0.0; 32 * POOLED],
            a3: vec![0.0; 32 * POOLED],
            gap: vec![0.0; 32],
            zd1: vec![0.0; 32],
            ad1: vec![0.0; 32],
            d1: vec![0.0; 16 * WIDTH],
            d2: vec![0.0; 32 * WIDTH],
            d3: vec![0.0; 32 * POOLED],
            dpool: vec![0.0; 32 * POOLED],
            dgap: vec![0.0; 32],
            dd1: vec![0.0; 32],
        }
    }
}

impl Default for Scratch {
    fn default() -> Self {
        Scratch::new()
    }
}

/// `out[o] = b[o] + sum_c sum_k w[o,c,k] * x[c, i+k-pad]`, zero padding.
#[allow(clippy::too_many_arguments)]
fn conv1d_same(
    x: &[f64],
    in_ch: usize,
    width: usize,
    w: &[f64],
    b: &[f64],
    out_ch: usize,
    k: usize,
    out: &mut [f64],
) {
    let pad = (k / 2) as isize;
    for o in 0..out_ch {
        let out_row = &mut out[o * width..(o + 1) * width];
        out_row.fill(b[o]);
        for c in 0..in_ch {
            let x_row = &x[c * width..(c + 1) * width];
            let w_base = (o * in_ch + c) * k;
            for kk in 0..k {
                let wv = w[w_base + kk];
                let shift = kk as isize - pad;
                let i0 = (-shift).max(0) as usize;
                let i1 = (width as isize - shift.max(0)) as usize;
                let src = &x_row[(i0 as isize + shift) as usize..(i1 as isize + shift) as usize];
                for (ov, xv) in out_row[i0..i1].iter_mut().zip(src) {
                    *ov += wv * xv;
                }
            }
        }
    }
}

/// Accumulate conv gradients: `dw`, `db` from (`dout`, `x`), and `dx`
/// (skipped when `None`, e.g. at the input layer).
#[allow(clippy::too_many_arguments)]
fn conv1d_same_backward(
    x: &[f64],
    in_ch: usize,
    width: usize,
    w: &[f64],
    out_ch: usize,
    k: usize,
    dout: &[f64],
    dw: &mut [f64],
    db: &mut [f64],
    mut dx: Option<&mut [f64]>,
) {
    let pad = (k / 2) as isize;
    if let Some(dx) = dx.as_deref_mut() {
        dx.fill(0.0);
    }
    for o in 0..out_ch {
        let dout_row = &dout[o * width..(o + 1) * width];
        db[o] += dout_row.iter().sum::<f64>();
        for c in 0..in_ch {
            let x_row = &x[c * width..(c + 1) * width];
            let w_base = (o * in_ch + c) * k;
            for kk in 0..k {
                let shift = kk as isize - pad;
                let i0 = (-shift).max(0) as usize;
                let i1 = (width as isize - shift.max(0)) as usize;
                let lo = (i0 as isize + shift) as usize;
                let hi = (i1 as isize + shift) as usize;
                let mut acc = 0.0;
                for (dv, xv) in dout_row[i0..i1].iter().zip(&x_row[lo..hi]) {
                    acc += dv * xv;
                }
                dw[w_base + kk] += acc;
                if let Some(dx) = dx.as_deref_mut() {
                    let wv = w[w_base + kk];
                    for (gv, dv) in dx[c * width + lo..c * width + hi].iter_mut().zip(&dout_row[i0..i1]) {
                        *gv += wv * dv;
                    }
                }
            }
        }
    }
}

fn relu(z: &[f64], a: &mut [f64]) {
    for (av, zv) in a.iter_mut().zip(z) {
        *av = zv.max(0.0);
    }
}

/// In place: zero the gradient wherever the pre-activation was <= 0.
fn relu_backward(z: &[f64], d: &mut [f64]) {
    for (dv, zv) in d.iter_mut().zip(z) {
        if *zv <= 0.0 {
            *dv = 0.0;
        }
    }
}

/// Normalized forward pass; fills `scratch` with every activation.
fn forward_into(w: &ModelWeights, x: &[f64], s: &mut Scratch) -> f64 {
    let t = &w.tensors;
    conv1d_same(x, 3, WIDTH, &t[C1_W].data, &t[C1_B].data, 16, 5, &mut s.z1);
    relu(&s.z1, &mut s.a1);
    conv1d_same(&s.a1, 16, WIDTH, &t[C2_W].data, &t[C2_B].data, 32, 5, &mut s.z2);
    relu(&s.z2, &mut s.a2);
    for c in 0..32 {
        for j in 0..POOLED {
            let base = c * WIDTH + 2 * j;
            let (idx, val) = if s.a2[base] >= s.a2[base + 1] {
                (base, s.a2[base])
            } else {
                (base + 1, s.a2[base + 1])
            };
            s.pool[c * POOLED + j] = val;
            s.arg[c * POOLED + j] = idx;
        }
    }
    conv1d_same(&s.pool, 32, POOLED, &t[C3_W].data, &t[C3_B].data, 32, 3, &mut s.z3);
    relu(&s.z3, &mut s.a3);
    for c in 0..32 {
        s.gap[c] = s.a3[c * POOLED..(c + 1) * POOLED].iter().sum::<f64>() / POOLED as f64;
    }
    let d1w = &t[D1_W].data;
    for j in 0..32 {
        let mut acc = t[D1_B].data[j];
        for (wv, gv) in d1w[j * 32..(j + 1) * 32].iter().zip(&s.gap) {
            acc += wv * gv;
        }
        s.zd1[j] = acc;
    }
    relu(&s.zd1, &mut s.ad1);
    let mut y = t[D2_B].data[0];
    for (wv, av) in t[D2_W].data.iter().zip(&s.ad1) {
        y += wv * av;
    }
    y
}

/// Disjoint mutable views of a conv layer's weight and bias gradients;
/// the bias tensor always directly follows its weight tensor.
fn wb_pair(grads: &mut [Tensor], w_idx: usize) -> (&mut [f64], &mut [f64]) {
    let (left, right) = grads.split_at_mut(w_idx + 1);
    (&mut left[w_idx].data, &mut right[0].data)
}

/// Backprop from `dy` (gradient at the normalized output) into `grads`,
/// which must be zero-initialized architecture tensors.
fn backward_into(w: &ModelWeights, x: &[f64], s: &mut Scratch, dy: f64, grads: &mut [Tensor]) {
    let t = &w.tensors;

    grads[D2_B].data[0] += dy;
    for j in 0..32 {
        grads[D2_W].data[j] += dy * s.ad1[j];
        s.dd1[j] = t[D2_W].data[j] * dy;
    }
    relu_backward(&s.zd1, &mut s.dd1);

    s.dgap.fill(0.0);
    for j in 0..32 {
        let dj = s.dd1[j];
        if dj == 0.0 {
            continue;
        }
        grads[D1_B].data[j] += dj;
        for c in 0..32 {
            grads[D1_W].data[j * 32 + c] += dj * s.gap[c];
            s.dgap[c] += t[D1_W].data[j * 32 + c] * dj;
        }
    }

    for c in 0..32 {
        let dv = s.dgap[c] / POOLED as f64;
        s.d3[c * POOLED..(c + 1) * POOLED].fill(dv);
    }
    relu_backward(&s.z3, &mut s.d3);

    // conv3 backward; its input gradient lands on the pooled map, which
    // unpools to the argmax positions of a2.
    let (dw3, db3) = wb_pair(grads, C3_W);
    conv1d_same_backward(
        &s.pool,
        32,
        POOLED,
        &t[C3_W].data,
        32,
        3,
        &s.d3,
        dw3,
        db3,
        Some(&mut s.dpool),
    );

    s.d2.fill(0.0);
    for (slot, dv) in s.arg.iter().zip(&s.dpool) {
        s.d2[*slot] += dv;
    }
    relu_backward(&s.z2, &mut s.d2);

    let (dw2, db2) = wb_pair(grads, C2_W);
    conv1d_same_backward(
        &s.a1,
        16,
        WIDTH,
        &t[C2_W].data,
        32,
        5,
        &s.d2,
        dw2,
        db2,
        Some(&mut s.d1),
    );
    relu_backward(&s.z1, &mut s.d1);

    let (dw1, db1) = wb_pair(grads, C1_W);
    conv1d_same_backward(
        x,
        3,
        WIDTH,
        &t[C1_W].data,
        16,
        5,
        &s.d1,
        dw1,
        db1,
        None,
    );
}

/// Normalized-space output with caller-provided scratch; the hot path for
/// loops that validate the weights once up front.
pub fn forward_normalized(
    w: &ModelWeights,
    x: &[f64],
    s: &mut Scratch,
) -> Result<f64, ModelError> {
    if x.len() != INPUT_LEN {
        return Err(ModelError::ShapeMismatch {
            expected: format!("[3, {WIDTH}] = {INPUT_LEN} values"),
            got: format!("{} values", x.len()),
        });
    }
    Ok(forward_into(w, x, s))
}

/// Predicted error in milliseconds for one `[3, 64]` normalized input.
pub fn forward(w: &ModelWeights, x: &[f64]) -> Result<f64, ModelError> {
    w.validate()?;
    let mut s = Scratch::new();
    let y_norm = forward_normalized(w, x, &mut s)?;
    Ok(w.stats.denormalize_output(y_norm))
}

/// Mean-squared-error loss over a batch (normalized target space) and
/// its gradient for every parameter tensor.
pub fn loss_and_grad(
    w: &ModelWeights,
    batch: &[TrainingSample],
) -> Result<(f64, Vec<Tensor>), ModelError> {
    if batch.is_empty() {
        return Err(ModelError::EmptyBatch);
    }
    w.validate()?;
    let mut grads: Vec<Tensor> =
        TENSOR_SPECS.iter().map(|(n, shape)| Tensor::zeros(n, shape)).collect();
    let mut s = Scratch::new();
    let mut loss = 0.0;
    let inv_n = 1.0 / batch.len() as f64;
    for sample in batch {
        if sample.x.len() != INPUT_LEN {
            return Err(ModelError::ShapeMismatch {
                expected: format!("{INPUT_LEN} values"),
                got: format!("{} values", sample.x.len()),
            });
        }
        let y_hat = forward_into(w, &sample.x, &mut s);
        let y = w.stats.normalize_target(sample.y_ms);
        let resid = y_hat - y;
        loss += resid * resid * inv_n;
        backward_into(w, &sample.x, &mut s, 2.0 * resid * inv_n, &mut grads);
    }
    Ok((loss, grads))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::features::CHANNELS;

    fn seeded_input(seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..INPUT_LEN).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect()
    }

    #[test]
    fn parameter_count_is_fixed() {
        let w = ModelWeights::zeros();
        assert_eq!(w.param_count(), 7041);
        assert!(w.validate().is_ok());
    }

    #[test]
    fn zero_weights_output_mean_target() {
        let mut w = ModelWeights::zeros();
        w.stats.target_mean = 12.5;
        w.stats.target_std = 3.0;
        let y = forward(&w, &seeded_input(1)).unwrap();
        assert_eq!(y, 12.5);
    }

    #[test]
    fn forward_rejects_bad_shape() {
        let w = init_weights(0);
        assert!(matches!(
            forward(&w, &[0.0; 10]).unwrap_err(),
            ModelError::ShapeMismatch { .. }
        ));
    }

    #[test]
    fn forward_deterministic() {
        let w1 = init_weights(7);
        let w2 = init_weights(7);
        assert_eq!(w1, w2);
        let x = seeded_input(3);
        let a = forward(&w1, &x).unwrap();
        let b = forward(&w2, &x).unwrap();
        assert_eq!(a, b);
        assert!(a.is_finite());
    }

    #[test]
    fn init_scale_respects_fan_in() {
        let w = init_weights(5);
        for (t, fan_in) in w.tensors.iter().zip(FAN_IN.iter()) {
            let k = (1.0 / *fan_in as f64).sqrt();
            assert!(t.data.iter().all(|v| v.abs() <= k), "{} exceeds init bound", t.name);
            // A 7041-draw uniform sample should come close to its bound.
            let max = t.data.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            assert!(max > 0.0);
        }
    }

    /// Direct per-position convolution over an explicitly padded buffer.
    /// Deliberately structured nothing like the production kernel.
    fn conv_reference(
        x: &[f64],
        in_ch: usize,
        width: usize,
        w: &[f64],
        b: &[f64],
        out_ch: usize,
        k: usize,
    ) -> Vec<f64> {
        let pad = k / 2;
        let padded_w = width + 2 * pad;
        let mut padded = vec![0.0; in_ch * padded_w];
        for c in 0..in_ch {
            for i in 0..width {
                padded[c * padded_w + pad + i] = x[c * width + i];
            }
        }
        let mut out = vec![0.0; out_ch * width];
        for o in 0..out_ch {
            for i in 0..width {
                let mut acc = b[o];
                for c in 0..in_ch {
                    for kk in 0..k {
                        acc += w[(o * in_ch + c) * k + kk] * padded[c * padded_w + i + kk];
                    }
                }
                out[o * width + i] = acc;
            }
        }
        out
    }

    #[test]
    fn conv_matches_independent_reference() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for &(in_ch, width, out_ch, k) in
            &[(3usize, 64usize, 16usize, 5usize), (16, 64, 32, 5), (32, 32, 32, 3), (2, 7, 4, 3)]
        {
            let x: Vec<f64> = (0..in_ch * width).map(|_| rng.random::<f64>() - 0.5).collect();
            let w: Vec<f64> = (0..out_ch * in_ch * k).map(|_| rng.random::<f64>() - 0.5).collect();
            let b: Vec<f64> = (0..out_ch).map(|_| rng.random::<f64>() - 0.5).collect();
            let mut fast = vec![0.0; out_ch * width];
            conv1d_same(&x, in_ch, width, &w, &b, out_ch, k, &mut fast);
            let slow = conv_reference(&x, in_ch, width, &w, &b, out_ch, k);
            for (a, r) in fast.iter().zip(&slow) {
                assert!((a - r).abs() < 1e-9, "conv mismatch: {a} vs {r}");
            }
        }
    }

    #[test]
    fn full_forward_matches_layerwise_reference() {
        let w = init_weights(11);
        let x = seeded_input(4);
        let mut s = Scratch::new();
        let fast = forward_into(&w, &x, &mut s);

        // Rebuild the whole pass from the reference convolution and plain
        // loops.
        let t = &w.tensors;
        let z1 = conv_reference(&x, 3, WIDTH, &t[C1_W].data, &t[C1_B].data, 16, 5);
        let a1: Vec<f64> = z1.iter().map(|v| v.max(0.0)).collect();
        let z2 = conv_reference(&a1, 16, WIDTH, &t[C2_W].data, &t[C2_B].data, 32, 5);
        let a2: Vec<f64> = z2.iter().map(|v| v.max(0.0)).collect();
        let mut pool = vec![0.0; 32 * POOLED];
        for c in 0..32 {
            for j in 0..POOLED {
                pool[c * POOLED + j] = a2[c * WIDTH + 2 * j].max(a2[c * WIDTH + 2 * j + 1]);
            }
        }
        let z3 = conv_reference(&pool, 32, POOLED, &t[C3_W].data, &t[C3_B].data, 32, 3);
        let a3: Vec<f64> = z3.iter().map(|v| v.max(0.0)).collect();
        let gap: Vec<f64> = (0..32)
            .map(|c| a3[c * POOLED..(c + 1) * POOLED].iter().sum::<f64>() / POOLED as f64)
            .collect();
        let mut ad1 = vec![0.0; 32];
        for (j, slot) in ad1.iter_mut().enumerate() {
            let mut acc = t[D1_B].data[j];
            for (c, g) in gap.iter().enumerate() {
                acc += t[D1_W].data[j * 32 + c] * g;
            }
            *slot = acc.max(0.0);
        }
        let mut y = t[D2_B].data[0];
        for (wv, a) in t[D2_W].data.iter().zip(&ad1) {
            y += wv * a;
        }
        assert!((fast - y).abs() < 1e-9, "forward mismatch: {fast} vs {y}");
    }

    #[test]
    fn perfect_predictor_zero_loss_zero_grads() {
        // Zero weights predict the normalized mean; targets at the mean
        // make the batch residuals exactly zero.
        let mut w = ModelWeights::zeros();
        w.stats.target_mean = 4.0;
        let batch: Vec<TrainingSample> = (0..3)
            .map(|k| TrainingSample {
                t: k,
                frame_idx: k as usize,
                x: seeded_input(k as u64),
                y_ms: 4.0,
            })
            .collect();
        let (loss, grads) = loss_and_grad(&w, &batch).unwrap();
        assert_eq!(loss, 0.0);
        for g in grads {
            assert!(g.data.iter().all(|v| *v == 0.0), "{} nonzero", g.name);
        }
    }

    #[test]
    fn duplicated_batch_leaves_loss_and_grads_unchanged() {
        let w = init_weights(13);
        let batch: Vec<TrainingSample> = (0..4)
            .map(|k| TrainingSample {
                t: k,
                frame_idx: k as usize,
                x: seeded_input(20 + k as u64),
                y_ms: k as f64 - 1.5,
            })
            .collect();
        let mut doubled = batch.clone();
        doubled.extend(batch.iter().cloned());
        let (l1, g1) = loss_and_grad(&w, &batch).unwrap();
        let (l2, g2) = loss_and_grad(&w, &doubled).unwrap();
        assert!((l1 - l2).abs() < 1e-12);
        for (a, b) in g1.iter().zip(&g2) {
            for (av, bv) in a.data.iter().zip(&b.data) {
                assert!((av - bv).abs() < 1e-12, "{} grad differs", a.name);
            }
        }
    }

    #[test]
    fn empty_batch_rejected() {
        let w = init_weights(0);
        assert!(matches!(loss_and_grad(&w, &[]).unwrap_err(), ModelError::EmptyBatch));
    }

    #[test]
    fn output_is_lipschitz_sane() {
        let w = init_weights(17);
        let x = seeded_input(8);
        let y0 = forward(&w, &x).unwrap();
        assert!(y0.is_finite());
        let delta = 1e-3;
        for probe in [0usize, WIDTH / 2, WIDTH, 2 * WIDTH + 5, INPUT_LEN - 1] {
            let mut xp = x.clone();
            xp[probe] += delta;
            let y1 = forward(&w, &xp).unwrap();
            assert!(y1.is_finite());
            let slope = (y1 - y0).abs() / delta;
            assert!(slope < 1e4, "entry {probe}: slope {slope}");
        }
        // Large but finite inputs stay finite.
        let big: Vec<f64> = vec![1e6; INPUT_LEN];
        assert!(forward(&w, &big).unwrap().is_finite());
    }

    #[test]
    fn gradients_match_finite_differences_spot_check() {
        // The exhaustive scan lives in the integration suite; this keeps
        // a handful of parameters per tensor honest in the unit run.
        let w = init_weights(23);
        let batch: Vec<TrainingSample> = (0..3)
            .map(|k| TrainingSample {
                t: k,
                frame_idx: k as usize,
                x: seeded_input(40 + k as u64),
                y_ms: (k as f64) * 0.4 - 0.3,
            })
            .collect();
        let (_, grads) = loss_and_grad(&w, &batch).unwrap();
        // A relu pre-activation can sit arbitrarily close to zero, which
        // biases central differences at any step wider than the crossing
        // distance. A correct gradient matches tightly once the step drops
        // below it; a wrong one disagrees at every step.
        for (ti, grad) in grads.iter().enumerate() {
            let len = w.tensors[ti].data.len();
            for pi in [0, len / 2, len - 1] {
                let analytic = grad.data[pi];
                let best = [1e-4, 1e-5, 1e-6]
                    .iter()
                    .map(|&h| {
                        let mut wp = w.clone();
                        wp.tensors[ti].data[pi] += h;
                        let (lp, _) = loss_and_grad(&wp, &batch).unwrap();
                        let mut wm = w.clone();
                        wm.tensors[ti].data[pi] -= h;
                        let (lm, _) = loss_and_grad(&wm, &batch).unwrap();
                        let numeric = (lp - lm) / (2.0 * h);
                        let denom = analytic.abs().max(numeric.abs()).max(1e-6);
                        ((analytic - numeric) / denom).abs()
                    })
                    .fold(f64::INFINITY, f64::min);
                assert!(
                    best < 1e-5,
                    "{}[{}]: analytic {} best rel err {}",
                    w.tensors[ti].name,
                    pi,
                    analytic,
                    best
                );
            }
        }
    }

    #[test]
    fn channels_constant_matches_width() {
        assert_eq!(CHANNELS * WIDTH, INPUT_LEN);
    }
}
