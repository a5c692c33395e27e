//! Sliding-window RMSSD, movement indexing, clock-offset estimation, and
//! cross-device frame alignment.
//!
//! All series share one grid convention: instants are whole multiples of
//! the step, starting at the first multiple at or after the stream's first
//! timestamp and ending at its last. Keeping instants phase-locked to the
//! epoch (rather than to each stream's own start) means series computed
//! from different devices land on the same instants and align with zero
//! skew once any constant clock offset has been corrected.
//!
//! Windows are right-aligned: the window for instant `t` covers samples
//! with timestamps in `(t - window, t]`.

use thiserror::Error;

use crate::ingest::{AccelRecord, IbiRecord};

/// Sliding-window parameters for RMSSD series.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WindowParams {
    /// Window length in seconds.
    pub window_s: u32,
    /// Grid step in seconds.
    pub step_s: u32,
    /// Windows holding fewer intervals than this are marked invalid, so a
    /// couple of stray beats never masquerade as an RMSSD value.
    pub min_ibi_per_window: usize,
}

impl Default for WindowParams {
    fn default() -> Self {
        WindowParams { window_s: 60, step_s: 1, min_ibi_per_window: 30 }
    }
}

/// One RMSSD value on the sliding grid.
///
/// `value` is `None` when the window held fewer than the required number
/// of intervals; `n_ibi` is the count actually present.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RmssdPoint {
    /// Right edge of the window, ms since epoch.
    pub t: i64,
    pub value: Option<f64>,
    pub n_ibi: usize,
}

/// Mean absolute deviation of acceleration magnitude from 1 g over a
/// window; zero for a device at rest in any orientation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MovementPoint {
    pub t: i64,
    pub value: f64,
}

/// Per-instant joined view across devices: reference RMSSD, watch RMSSD,
/// movement index, and their error.
///
/// `error` is `rmssd_ref - rmssd_watch`, filled at construction. Frames
/// exist only where all three constituents were valid and within skew
/// tolerance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlignedFrame {
    pub t: i64,
    pub rmssd_ref: f64,
    pub rmssd_watch: f64,
    pub movement: f64,
    pub error: f64,
}

/// Constant clock offset between two devices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OffsetEstimate {
    /// Milliseconds to add to the watch stream's timestamps to align it
    /// with the reference stream.
    pub offset_ms: i64,
    /// Peak cross-correlation of the 1 Hz heart-rate series at that lag.
    /// Near zero means the two streams do not plausibly describe the same
    /// heart, and the offset is not meaningful.
    pub correlation: f64,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HrvError {
    #[error("need at least 2 intervals, got {got}")]
    InsufficientSamples { got: usize },
    #[error("empty stream")]
    EmptyStream,
    #[error("streams too short for offset estimation")]
    InsufficientData,
}

/// RMSSD of a window of inter-beat intervals, in milliseconds.
///
/// Square root of the mean of squared successive differences; the divisor
/// is the number of differences (one less than the number of intervals).
///
/// ```
/// use hrvcorr::hrv::rmssd_window;
///
/// assert_eq!(rmssd_window(&[800.0, 810.0]).unwrap(), 10.0);
/// assert_eq!(rmssd_window(&[800.0, 800.0, 800.0, 800.0]).unwrap(), 0.0);
/// ```
pub fn rmssd_window(ibis: &[f64]) -> Result<f64, HrvError> {
    if ibis.len() < 2 {
        return Err(HrvError::InsufficientSamples { got: ibis.len() });
    }
    let mut sum_sq = 0.0;
    for pair in ibis.windows(2) {
        let d = pair[1] - pair[0];
        sum_sq += d * d;
    }
    Ok((sum_sq / (ibis.len() - 1) as f64).sqrt())
}

/// Smallest multiple of `step` at or after `x` (`step > 0`).
fn snap_up(x: i64, step: i64) -> i64 {
    let q = x.div_euclid(step);
    if x.rem_euclid(step) == 0 {
        x
    } else {
        (q + 1) * step
    }
}

/// Sliding-window RMSSD over a beat stream.
///
/// Emits one point per grid instant from the first step-multiple at or
/// after the stream start through the last timestamp. Each point is
/// computed from the intervals in `(t - window, t]` and is invalid when
/// fewer than `min_ibi_per_window` intervals are present.
pub fn rmssd_series(records: &[IbiRecord], params: &WindowParams) -> Result<Vec<RmssdPoint>, HrvError> {
    assert!(params.window_s > 0 && params.step_s > 0, "window and step must be positive");
    if records.is_empty() {
        return Err(HrvError::EmptyStream);
    }
    let window_ms = i64::from(params.window_s) * 1000;
    let step_ms = i64::from(params.step_s) * 1000;
    let min_n = params.min_ibi_per_window.max(2);

    let ts: Vec<i64> = records.iter().map(|r| r.t).collect();
    let values: Vec<f64> = records.iter().map(|r| r.ibi).collect();
    let last = *ts.last().expect("non-empty");

    let mut out = Vec::new();
    let mut t = snap_up(ts[0], step_ms);
    let mut lo = 0usize;
    let mut hi = 0usize;
    while t <= last {
        while hi < ts.len() && ts[hi] <= t {
            hi += 1;
        }
        while lo < hi && ts[lo] <= t - window_ms {
            lo += 1;
        }
        let n = hi - lo;
        let value = if n >= min_n {
            Some(rmssd_window(&values[lo..hi]).expect("window holds >= 2 intervals"))
        } else {
            None
        };
        out.push(RmssdPoint { t, value, n_ibi: n });
        t += step_ms;
    }
    Ok(out)
}

/// Sliding-window movement index over an accelerometer stream.
///
/// Per grid instant, the mean over window samples of
/// `| sqrt(ax^2 + ay^2 + az^2) - 1 |` in g. Instants whose window holds no
/// samples are dropped.
pub fn movement_series(
    records: &[AccelRecord],
    window_s: u32,
    step_s: u32,
) -> Result<Vec<MovementPoint>, HrvError> {
    assert!(window_s > 0 && step_s > 0, "window and step must be positive");
    if records.is_empty() {
        return Err(HrvError::EmptyStream);
    }
    let window_ms = i64::from(window_s) * 1000;
    let step_ms = i64::from(step_s) * 1000;

    let ts: Vec<i64> = records.iter().map(|r| r.t).collect();
    let dev: Vec<f64> = records.iter().map(|r| (r.magnitude() - 1.0).abs()).collect();
    let last = *ts.last().expect("non-empty");

    let mut out = Vec::new();
    let mut t = snap_up(ts[0], step_ms);
    let mut lo = 0usize;
    let mut hi = 0usize;
    while t <= last {
        while hi < ts.len() && ts[hi] <= t {
            hi += 1;
        }
        while lo < hi && ts[lo] <= t - window_ms {
            lo += 1;
        }
        if hi > lo {
            let sum: f64 = dev[lo..hi].iter().sum();
            out.push(MovementPoint { t, value: sum / (hi - lo) as f64 });
        }
        t += step_ms;
    }
    Ok(out)
}

/// Index of the element of `ts` nearest to `target`, ties toward the
/// earlier element. `ts` must be sorted ascending and non-empty.
fn nearest_idx(ts: &[i64], target: i64) -> usize {
    let after = ts.partition_point(|&t| t < target);
    if after == 0 {
        return 0;
    }
    if after == ts.len() {
        return ts.len() - 1;
    }
    let before = after - 1;
    if (target - ts[before]) <= (ts[after] - target) {
        before
    } else {
        after
    }
}

/// Nearest-neighbor join of a watch RMSSD series and a movement series
/// onto the reference series' grid.
///
/// Each valid reference point yields a frame when its nearest watch point
/// and nearest movement point both lie within `max_skew_ms` and the watch
/// point is valid. The frame's `error` is `rmssd_ref - rmssd_watch`.
/// Output never exceeds the reference series in length.
pub fn align(
    ref_series: &[RmssdPoint],
    watch_series: &[RmssdPoint],
    movement: &[MovementPoint],
    max_skew_ms: i64,
) -> Vec<AlignedFrame> {
    if watch_series.is_empty() || movement.is_empty() {
        return Vec::new();
    }
    let watch_ts: Vec<i64> = watch_series.iter().map(|p| p.t).collect();
    let move_ts: Vec<i64> = movement.iter().map(|p| p.t).collect();

    let mut frames = Vec::new();
    for rp in ref_series {
        let rmssd_ref = match rp.value {
            Some(v) => v,
            None => continue,
        };
        let wi = nearest_idx(&watch_ts, rp.t);
        if (watch_ts[wi] - rp.t).abs() > max_skew_ms {
            continue;
        }
        let rmssd_watch = match watch_series[wi].value {
            Some(v) => v,
            None => continue,
        };
        let mi = nearest_idx(&move_ts, rp.t);
        if (move_ts[mi] - rp.t).abs() > max_skew_ms {
            continue;
        }
        frames.push(AlignedFrame {
            t: rp.t,
            rmssd_ref,
            rmssd_watch,
            movement: movement[mi].value,
            error: rmssd_ref - rmssd_watch,
        });
    }
    frames
}

const MIN_OFFSET_SPAN_MS: i64 = 300_000;

/// Estimate the constant clock offset between two beat streams.
///
/// Both streams are resampled to 1 Hz instantaneous heart rate (last
/// completed interval held between beats), and the lag in
/// `[-search_range_s, +search_range_s]` whole seconds maximizing the
/// Pearson correlation wins; ties break toward smaller |lag|. The result
/// is the shift to add to the watch stream. Requires both streams to span
/// at least five minutes.
pub fn estimate_clock_offset(
    ref_ibi: &[IbiRecord],
    watch_ibi: &[IbiRecord],
    search_range_s: u32,
) -> Result<OffsetEstimate, HrvError> {
    if !(span_ms(ref_ibi) >= MIN_OFFSET_SPAN_MS && span_ms(watch_ibi) >= MIN_OFFSET_SPAN_MS) {
        return Err(HrvError::InsufficientData);
    }
    let (ref_start, ref_hr) = hr_1hz(ref_ibi);
    let (watch_start, watch_hr) = hr_1hz(watch_ibi);

    let mut best_lag = 0i64;
    let mut best_r = f64::NEG_INFINITY;
    let range = i64::from(search_range_s);
    for lag in -range..=range {
        // Correlate ref at second s with watch at second s - lag.
        let s_from = ref_start.max(watch_start + lag);
        let s_to = (ref_start + ref_hr.len() as i64 - 1).min(watch_start + lag + watch_hr.len() as i64 - 1);
        if s_to - s_from + 1 < 3 {
            continue;
        }
        let n = (s_to - s_from + 1) as usize;
        let ro = (s_from - ref_start) as usize;
        let wo = (s_from - lag - watch_start) as usize;
        let r = pearson_r(&ref_hr[ro..ro + n], &watch_hr[wo..wo + n]);
        if r > best_r || (r == best_r && better_tie(lag, best_lag)) {
            best_r = r;
            best_lag = lag;
        }
    }
    if best_r == f64::NEG_INFINITY {
        return Err(HrvError::InsufficientData);
    }
    Ok(OffsetEstimate { offset_ms: best_lag * 1000, correlation: best_r })
}

fn better_tie(cand: i64, incumbent: i64) -> bool {
    cand.abs() < incumbent.abs() || (cand.abs() == incumbent.abs() && cand < incumbent)
}

fn span_ms(records: &[IbiRecord]) -> i64 {
    match (records.first(), records.last()) {
        (Some(a), Some(b)) => b.t - a.t,
        _ => 0,
    }
}

/// 1 Hz instantaneous heart rate: at each whole second from the first beat
/// onward, 60000 / (last completed interval). Returns the first second and
/// the samples.
fn hr_1hz(records: &[IbiRecord]) -> (i64, Vec<f64>) {
    let first_s = snap_up(records[0].t, 1000) / 1000;
    let last_s = records.last().expect("non-empty").t.div_euclid(1000);
    if last_s < first_s {
        return (first_s, Vec::new());
    }
    let mut hr = Vec::with_capacity((last_s - first_s + 1) as usize);
    let mut j = 0usize;
    for s in first_s..=last_s {
        let t = s * 1000;
        while j + 1 < records.len() && records[j + 1].t <= t {
            j += 1;
        }
        hr.push(60_000.0 / records[j].ibi);
    }
    (first_s, hr)
}

/// Plain Pearson r; 0.0 when either side has zero variance.
fn pearson_r(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (&a, &b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        0.0
    } else {
        sxy / (sxx * syy).sqrt()
    }
}

/// Copy of a beat stream with all timestamps shifted by `offset_ms`.
pub fn shift_timestamps(records: &[IbiRecord], offset_ms: i64) -> Vec<IbiRecord> {
    records.iter().map(|r| IbiRecord { t: r.t + offset_ms, ibi: r.ibi }).collect()
}
