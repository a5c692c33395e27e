//! Feature extraction: aligned frames to fixed-shape training samples.
//!
//! Each sample looks back over the 64 seconds trailing its frame, on the
//! same one-second grid the series were computed on: channel 0 holds the
//! watch's inter-beat interval (zero-order hold between beats), channel 1
//! the movement index, channel 2 the watch RMSSD. The target is the
//! frame's reference-minus-watch error in milliseconds.

use thiserror::Error;

use crate::hrv::{AlignedFrame, MovementPoint, RmssdPoint};
use crate::ingest::IbiRecord;

pub const CHANNELS: usize = 3;
pub const WIDTH: usize = 64;
pub const INPUT_LEN: usize = CHANNELS * WIDTH;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("frame at {t} lacks {missing} history")]
    InsufficientHistory { t: i64, missing: &'static str },
    #[error("expected input of shape {expected}, got {got}")]
    ShapeMismatch { expected: String, got: String },
    #[error("empty batch")]
    EmptyBatch,
    #[error("need at least {need} samples, got {got}")]
    TooFewSamples { got: usize, need: usize },
    #[error("corrupt weight file: {0}")]
    CorruptFile(String),
    #[error("weight file version {got}, expected {expected}")]
    VersionMismatch { expected: u8, got: u8 },
}

/// Per-channel and target normalization statistics, fitted on the
/// training split only and carried with the weights ever after.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormStats {
    pub ch_mean: [f64; CHANNELS],
    pub ch_std: [f64; CHANNELS],
    pub target_mean: f64,
    pub target_std: f64,
}

impl NormStats {
    pub fn identity() -> Self {
        NormStats { ch_mean: [0.0; CHANNELS], ch_std: [1.0; CHANNELS], target_mean: 0.0, target_std: 1.0 }
    }

    pub fn normalize_target(&self, y_ms: f64) -> f64 {
        (y_ms - self.target_mean) / self.target_std
    }

    pub fn denormalize_output(&self, y_norm: f64) -> f64 {
        y_norm * self.target_std + self.target_mean
    }
}

/// Un-normalized sample: raw channel values plus the frame it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct RawSample {
    pub t: i64,
    /// Index into the frame slice the sample was built from.
    pub frame_idx: usize,
    /// Row-major `[CHANNELS, WIDTH]`.
    pub x: Vec<f64>,
    /// Raw error target, ms.
    pub y_ms: f64,
}

/// Normalized sample ready for the network. `x` is z-scored per channel;
/// the raw target is kept so losses can be formed against any statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSample {
    pub t: i64,
    pub frame_idx: usize,
    pub x: Vec<f64>,
    pub y_ms: f64,
}

/// Samples plus the statistics that normalized them.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub samples: Vec<TrainingSample>,
    pub stats: NormStats,
}

/// Build the raw sample for one frame, or say which channel's history is
/// missing.
///
/// Watch IBI needs a beat at or before the window start (zero-order hold
/// has nothing to hold otherwise); movement and watch RMSSD need a valid
/// point at every one of the 64 grid instants.
pub fn sample_for_frame(
    frames: &[AlignedFrame],
    frame_idx: usize,
    watch_ibi: &[IbiRecord],
    watch_rmssd: &[RmssdPoint],
    movement: &[MovementPoint],
) -> Result<RawSample, ModelError> {
    let frame = &frames[frame_idx];
    let t0 = frame.t - (WIDTH as i64 - 1) * 1000;

    let mut x = vec![0.0f64; INPUT_LEN];

    // Channel 0: watch IBI, zero-order hold at each grid second.
    let mut j = watch_ibi.partition_point(|r| r.t <= t0);
    if j == 0 {
        return Err(ModelError::InsufficientHistory { t: frame.t, missing: "watch ibi" });
    }
    j -= 1;
    for (i, slot) in x[..WIDTH].iter_mut().enumerate() {
        let instant = t0 + i as i64 * 1000;
        while j + 1 < watch_ibi.len() && watch_ibi[j + 1].t <= instant {
            j += 1;
        }
        *slot = watch_ibi[j].ibi;
    }

    // Channels 1 and 2 live on the same epoch-aligned grid as the frame,
    // so coverage is an index-range check.
    fill_grid_channel(
        &mut x[WIDTH..2 * WIDTH],
        t0,
        movement.first().map(|p| p.t),
        movement.len(),
        |k| Some(movement[k].value),
    )
    .map_err(|_| ModelError::InsufficientHistory { t: frame.t, missing: "movement" })?;
    fill_grid_channel(
        &mut x[2 * WIDTH..],
        t0,
        watch_rmssd.first().map(|p| p.t),
        watch_rmssd.len(),
        |k| watch_rmssd[k].value,
    )
    .map_err(|_| ModelError::InsufficientHistory { t: frame.t, missing: "watch rmssd" })?;

    Ok(RawSample { t: frame.t, frame_idx, x, y_ms: frame.error })
}

/// Copy 64 one-second grid values starting at `t0` out of a series that
/// itself starts at `start_t` with 1 s spacing. Fails on any instant that
/// is out of range or invalid.
fn fill_grid_channel(
    out: &mut [f64],
    t0: i64,
    start_t: Option<i64>,
    len: usize,
    get: impl Fn(usize) -> Option<f64>,
) -> Result<(), ()> {
    let start_t = start_t.ok_or(())?;
    for (i, slot) in out.iter_mut().enumerate() {
        let instant = t0 + i as i64 * 1000;
        let off = instant - start_t;
        if off < 0 || off % 1000 != 0 {
            return Err(());
        }
        let k = (off / 1000) as usize;
        if k >= len {
            return Err(());
        }
        *slot = get(k).ok_or(())?;
    }
    Ok(())
}

/// Raw samples for every frame with a fully covered 64 s history; frames
/// without one are skipped.
pub fn build_raw_samples(
    frames: &[AlignedFrame],
    watch_ibi: &[IbiRecord],
    watch_rmssd: &[RmssdPoint],
    movement: &[MovementPoint],
) -> Vec<RawSample> {
    (0..frames.len())
        .filter_map(|idx| sample_for_frame(frames, idx, watch_ibi, watch_rmssd, movement).ok())
        .collect()
}

/// Fit normalization statistics on the earliest `split_fraction` of the
/// samples (population standard deviation; zero or non-finite spread
/// falls back to 1 so constant channels normalize to zero, not NaN).
pub fn fit_stats(raw: &[RawSample], split_fraction: f64) -> NormStats {
    let n_train = split_index(raw.len(), split_fraction);
    let train = &raw[..n_train];
    let mut stats = NormStats::identity();
    if train.is_empty() {
        return stats;
    }
    let count = (train.len() * WIDTH) as f64;
    for c in 0..CHANNELS {
        let mut sum = 0.0;
        for s in train {
            sum += s.x[c * WIDTH..(c + 1) * WIDTH].iter().sum::<f64>();
        }
        let mean = sum / count;
        let mut var = 0.0;
        for s in train {
            var += s.x[c * WIDTH..(c + 1) * WIDTH].iter().map(|v| (v - mean) * (v - mean)).sum::<f64>();
        }
        let std = (var / count).sqrt();
        stats.ch_mean[c] = mean;
        stats.ch_std[c] = if std.is_finite() && std > 0.0 { std } else { 1.0 };
    }
    let ty_mean = train.iter().map(|s| s.y_ms).sum::<f64>() / train.len() as f64;
    let ty_var = train.iter().map(|s| (s.y_ms - ty_mean) * (s.y_ms - ty_mean)).sum::<f64>()
        / train.len() as f64;
    let ty_std = ty_var.sqrt();
    stats.target_mean = ty_mean;
    stats.target_std = if ty_std.is_finite() && ty_std > 0.0 { ty_std } else { 1.0 };
    stats
}

/// Boundary index of the temporal split: everything before it trains,
/// everything from it on evaluates. Clamped so neither side is empty for
/// n >= 2.
pub fn split_index(n: usize, split_fraction: f64) -> usize {
    if n == 0 {
        return 0;
    }
    let k = (n as f64 * split_fraction).floor() as usize;
    k.clamp(1, n - 1).min(n)
}

/// Z-score one raw sample with the given statistics.
pub fn normalize_sample(raw: &RawSample, stats: &NormStats) -> TrainingSample {
    let mut x = raw.x.clone();
    for c in 0..CHANNELS {
        for v in &mut x[c * WIDTH..(c + 1) * WIDTH] {
            *v = (*v - stats.ch_mean[c]) / stats.ch_std[c];
        }
    }
    TrainingSample { t: raw.t, frame_idx: raw.frame_idx, x, y_ms: raw.y_ms }
}

/// One sample per frame with full history, normalized by statistics
/// fitted on the earliest `split_fraction` of those samples.
pub fn build_samples(
    frames: &[AlignedFrame],
    watch_ibi: &[IbiRecord],
    watch_rmssd: &[RmssdPoint],
    movement: &[MovementPoint],
    split_fraction: f64,
) -> Dataset {
    let raw = build_raw_samples(frames, watch_ibi, watch_rmssd, movement);
    let stats = fit_stats(&raw, split_fraction);
    let samples = raw.iter().map(|r| normalize_sample(r, &stats)).collect();
    Dataset { samples, stats }
}
