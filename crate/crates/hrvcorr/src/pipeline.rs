//! End-to-end orchestration: load a recorded session, build the aligned
//! frame set, quantify the watch error, evaluate a trained corrector, and
//! export plot-ready series.
//!
//! Reports render as `key=value` lines with a fixed key order and Rust's
//! shortest-round-trip float formatting, so identical inputs produce
//! byte-identical report files.

use std::fs::File;
use std::io::{self, BufReader, Write};
use std::path::Path;

use thiserror::Error;

use crate::hrv::{
    self, AlignedFrame, HrvError, MovementPoint, OffsetEstimate, RmssdPoint, WindowParams,
};
use crate::ingest::{self, AccelRecord, IbiRecord, IngestError, SourceTag};
use crate::model::{self, ModelError, ModelWeights};
use crate::stats::{self, CorrelationResult, StatsError};
use crate::synth::SynthError;

/// Nearest-neighbor tolerance when joining per-device series.
pub const MAX_SKEW_MS: i64 = 500;
/// Fewer aligned frames than this means the streams barely overlap and
/// any statistic over them would be noise; analysis refuses to run.
pub const MIN_ANALYZE_FRAMES: usize = 100;
/// Clock-offset search half-range.
pub const OFFSET_SEARCH_RANGE_S: u32 = 30;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("{path}: {source}")]
    Ingest { path: String, source: IngestError },
    #[error(transparent)]
    Hrv(#[from] HrvError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error("only {got} aligned frames, need at least {need}")]
    InsufficientFrames { got: usize, need: usize },
    #[error("i/o: {0}")]
    Io(#[from] io::Error),
}

/// Process exit code for an error, per the fixed map: 2 bad arguments,
/// 3 I/O or parse, 4 insufficient data, 5 too few samples, 6 weight
/// shape/version mismatch.
pub fn exit_code(err: &PipelineError) -> i32 {
    match err {
        PipelineError::Ingest { .. } | PipelineError::Io(_) => 3,
        PipelineError::Synth(SynthError::InvalidConfig(_)) => 2,
        PipelineError::Synth(SynthError::Io(_)) => 3,
        PipelineError::InsufficientFrames { .. } => 4,
        PipelineError::Hrv(_) => 4,
        PipelineError::Stats(_) => 4,
        PipelineError::Model(e) => match e {
            ModelError::TooFewSamples { .. } | ModelError::EmptyBatch => 5,
            ModelError::ShapeMismatch { .. } | ModelError::VersionMismatch { .. } => 6,
            ModelError::CorruptFile(_) => 3,
            ModelError::InsufficientHistory { .. } => 4,
        },
    }
}

/// A loaded two-device recording, cleaned and clock-aligned.
#[derive(Debug, Clone, PartialEq)]
pub struct Session {
    pub ref_ibi: Vec<IbiRecord>,
    /// Watch beats after artifact cleaning and offset correction.
    pub watch_ibi: Vec<IbiRecord>,
    pub accel: Vec<AccelRecord>,
    /// `None` when either stream was too short to estimate one.
    pub offset: Option<OffsetEstimate>,
    pub dropped_ref: usize,
    pub dropped_watch: usize,
}

fn read_ibi(path: &Path, tag: SourceTag) -> Result<Vec<IbiRecord>, PipelineError> {
    let wrap = |source: IngestError| PipelineError::Ingest {
        path: format!("{} ({})", path.display(), tag),
        source,
    };
    let file = File::open(path).map_err(|e| wrap(IngestError::Io(e)))?;
    ingest::read_ibi_csv(BufReader::new(file), tag).map(|s| s.records).map_err(wrap)
}

/// Load, clean, and clock-align a session from its three CSV files.
///
/// Both beat streams pass through artifact cleaning; the watch stream is
/// then shifted by the estimated constant clock offset (skipped, with
/// `offset = None`, when either stream spans under five minutes).
pub fn load_session(
    ref_path: &Path,
    watch_path: &Path,
    accel_path: &Path,
) -> Result<Session, PipelineError> {
    let ref_raw = read_ibi(ref_path, SourceTag::Reference)?;
    let watch_raw = read_ibi(watch_path, SourceTag::Watch)?;
    let accel = {
        let wrap = |source: IngestError| PipelineError::Ingest {
            path: accel_path.display().to_string(),
            source,
        };
        let file = File::open(accel_path).map_err(|e| wrap(IngestError::Io(e)))?;
        ingest::read_accel_csv(BufReader::new(file)).map_err(wrap)?
    };

    let (ref_ibi, dropped_ref) = ingest::clean_ibi(&ref_raw);
    let (watch_clean, dropped_watch) = ingest::clean_ibi(&watch_raw);

    let (watch_ibi, offset) = match hrv::estimate_clock_offset(
        &ref_ibi,
        &watch_clean,
        OFFSET_SEARCH_RANGE_S,
    ) {
        Ok(est) => (hrv::shift_timestamps(&watch_clean, est.offset_ms), Some(est)),
        Err(HrvError::InsufficientData) => (watch_clean, None),
        Err(e) => return Err(e.into()),
    };

    Ok(Session { ref_ibi, watch_ibi, accel, offset, dropped_ref, dropped_watch })
}

/// The per-device series and their aligned join.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameSet {
    pub ref_series: Vec<RmssdPoint>,
    pub watch_series: Vec<RmssdPoint>,
    pub movement: Vec<MovementPoint>,
    pub frames: Vec<AlignedFrame>,
}

/// Compute both RMSSD series, the movement index, and the aligned frames.
pub fn compute_frames(session: &Session, params: &WindowParams) -> Result<FrameSet, PipelineError> {
    let ref_series = hrv::rmssd_series(&session.ref_ibi, params)?;
    let watch_series = hrv::rmssd_series(&session.watch_ibi, params)?;
    let movement = hrv::movement_series(&session.accel, params.window_s, params.step_s)?;
    let frames = hrv::align(&ref_series, &watch_series, &movement, MAX_SKEW_MS);
    Ok(FrameSet { ref_series, watch_series, movement, frames })
}

/// Explanatory analysis over every valid aligned frame.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalyzeReport {
    pub n_frames: usize,
    pub offset_ms: Option<i64>,
    pub dropped_ref: usize,
    pub dropped_watch: usize,
    pub rmse_before: f64,
    pub r_before: Result<CorrelationResult, StatsError>,
    pub movement_error: Result<CorrelationResult, StatsError>,
}

/// Build the explanatory report. Needs [`MIN_ANALYZE_FRAMES`] frames.
pub fn analyze(session: &Session, frame_set: &FrameSet) -> Result<AnalyzeReport, PipelineError> {
    let frames = &frame_set.frames;
    if frames.len() < MIN_ANALYZE_FRAMES {
        return Err(PipelineError::InsufficientFrames {
            got: frames.len(),
            need: MIN_ANALYZE_FRAMES,
        });
    }
    let ref_vals: Vec<f64> = frames.iter().map(|f| f.rmssd_ref).collect();
    let watch_vals: Vec<f64> = frames.iter().map(|f| f.rmssd_watch).collect();
    let movement: Vec<f64> = frames.iter().map(|f| f.movement).collect();
    let error: Vec<f64> = frames.iter().map(|f| f.error).collect();
    Ok(AnalyzeReport {
        n_frames: frames.len(),
        offset_ms: session.offset.map(|o| o.offset_ms),
        dropped_ref: session.dropped_ref,
        dropped_watch: session.dropped_watch,
        rmse_before: stats::rmse(&watch_vals, &ref_vals)?,
        r_before: stats::pearson(&watch_vals, &ref_vals),
        movement_error: stats::pearson(&movement, &error),
    })
}

/// Held-out evaluation of a trained corrector.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub rmse_before: f64,
    pub rmse_after: f64,
    pub r_before: Result<CorrelationResult, StatsError>,
    pub r_after: Result<CorrelationResult, StatsError>,
    pub movement_error_corr: Result<CorrelationResult, StatsError>,
    pub n_frames: usize,
}

/// Evaluate `weights` on the temporal test split: the latest
/// `1 - split_fraction` of the frame-backed samples. Inputs normalize
/// with the statistics carried in the weight file.
pub fn evaluate(
    frame_set: &FrameSet,
    watch_ibi: &[IbiRecord],
    weights: &ModelWeights,
    split_fraction: f64,
) -> Result<EvalReport, PipelineError> {
    weights.validate().map_err(PipelineError::Model)?;
    let raw = model::build_raw_samples(
        &frame_set.frames,
        watch_ibi,
        &frame_set.watch_series,
        &frame_set.movement,
    );
    let k = model::split_index(raw.len(), split_fraction);
    let test = &raw[k..];
    if test.is_empty() {
        return Err(PipelineError::InsufficientFrames { got: 0, need: 1 });
    }

    let mut ref_vals = Vec::with_capacity(test.len());
    let mut watch_vals = Vec::with_capacity(test.len());
    let mut adjusted = Vec::with_capacity(test.len());
    let mut movement = Vec::with_capacity(test.len());
    let mut error = Vec::with_capacity(test.len());
    for sample in test {
        let frame = &frame_set.frames[sample.frame_idx];
        let x = model::normalize_sample(sample, &weights.stats);
        let predicted = model::forward(weights, &x.x).map_err(PipelineError::Model)?;
        ref_vals.push(frame.rmssd_ref);
        watch_vals.push(frame.rmssd_watch);
        adjusted.push(model::correct(frame.rmssd_watch, predicted));
        movement.push(frame.movement);
        error.push(frame.error);
    }

    Ok(EvalReport {
        rmse_before: stats::rmse(&watch_vals, &ref_vals)?,
        rmse_after: stats::rmse(&adjusted, &ref_vals)?,
        r_before: stats::pearson(&watch_vals, &ref_vals),
        r_after: stats::pearson(&adjusted, &ref_vals),
        movement_error_corr: stats::pearson(&movement, &error),
        n_frames: test.len(),
    })
}

fn push_corr(out: &mut String, prefix: &str, corr: &Result<CorrelationResult, StatsError>) {
    match corr {
        Ok(c) => {
            out.push_str(&format!("{prefix}_r={}\n", c.r));
            out.push_str(&format!("{prefix}_t={}\n", c.t_stat));
            out.push_str(&format!("{prefix}_p={}\n", c.p_two_sided));
            out.push_str(&format!("{prefix}_n={}\n", c.n));
        }
        Err(e) => {
            let code = match e {
                StatsError::DegenerateVariance => "degenerate_variance",
                StatsError::EmptyInput => "empty_input",
                StatsError::LengthMismatch { .. } => "length_mismatch",
                StatsError::TooFewSamples { .. } => "too_few_samples",
                StatsError::InvalidDf => "invalid_df",
            };
            out.push_str(&format!("{prefix}={code}\n"));
        }
    }
}

/// Machine-readable `key=value` rendering of the explanatory report.
pub fn render_analyze(report: &AnalyzeReport) -> String {
    let mut out = String::new();
    out.push_str(&format!("n_frames={}\n", report.n_frames));
    match report.offset_ms {
        Some(ms) => out.push_str(&format!("offset_ms={ms}\n")),
        None => out.push_str("offset_ms=unestimated\n"),
    }
    out.push_str(&format!("dropped_ref={}\n", report.dropped_ref));
    out.push_str(&format!("dropped_watch={}\n", report.dropped_watch));
    out.push_str(&format!("rmse_before_ms={}\n", report.rmse_before));
    push_corr(&mut out, "r_before", &report.r_before);
    push_corr(&mut out, "movement_error", &report.movement_error);
    out
}

/// Machine-readable `key=value` rendering of the evaluation report.
pub fn render_eval(report: &EvalReport) -> String {
    let mut out = String::new();
    out.push_str(&format!("n_frames={}\n", report.n_frames));
    out.push_str(&format!("rmse_before_ms={}\n", report.rmse_before));
    out.push_str(&format!("rmse_after_ms={}\n", report.rmse_after));
    push_corr(&mut out, "r_before", &report.r_before);
    push_corr(&mut out, "r_after", &report.r_after);
    push_corr(&mut out, "movement_error", &report.movement_error_corr);
    out
}

/// One row of the plot export, already smoothed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlotRow {
    pub t: i64,
    pub rmssd_ref: f64,
    pub rmssd_watch_raw: f64,
    pub rmssd_watch_adjusted: f64,
    pub movement: f64,
}

/// Exponential moving average in place: `s_0 = v_0`,
/// `s_k = alpha * v_k + (1 - alpha) * s_{k-1}`.
pub fn ema_smooth(values: &mut [f64], alpha: f64) {
    assert!(alpha > 0.0 && alpha <= 1.0, "alpha must be in (0, 1]");
    let mut prev = match values.first() {
        Some(v) => *v,
        None => return,
    };
    for v in values.iter_mut().skip(1) {
        prev = alpha * *v + (1.0 - alpha) * prev;
        *v = prev;
    }
}

/// Build the plot series over every frame a sample exists for: reference,
/// raw watch, corrected watch, and movement, each EMA-smoothed with
/// `alpha` (1 disables smoothing).
pub fn plot_series(
    frame_set: &FrameSet,
    watch_ibi: &[IbiRecord],
    weights: &ModelWeights,
    alpha: f64,
) -> Result<Vec<PlotRow>, PipelineError> {
    weights.validate().map_err(PipelineError::Model)?;
    let raw = model::build_raw_samples(
        &frame_set.frames,
        watch_ibi,
        &frame_set.watch_series,
        &frame_set.movement,
    );
    let n = raw.len();
    let mut t = Vec::with_capacity(n);
    let mut ref_vals = Vec::with_capacity(n);
    let mut watch_vals = Vec::with_capacity(n);
    let mut adjusted = Vec::with_capacity(n);
    let mut movement = Vec::with_capacity(n);
    for sample in &raw {
        let frame = &frame_set.frames[sample.frame_idx];
        let x = model::normalize_sample(sample, &weights.stats);
        let predicted = model::forward(weights, &x.x).map_err(PipelineError::Model)?;
        t.push(frame.t);
        ref_vals.push(frame.rmssd_ref);
        watch_vals.push(frame.rmssd_watch);
        adjusted.push(model::correct(frame.rmssd_watch, predicted));
        movement.push(frame.movement);
    }
    for column in [&mut ref_vals, &mut watch_vals, &mut adjusted, &mut movement] {
        ema_smooth(column, alpha);
    }
    Ok(t
        .into_iter()
        .enumerate()
        .map(|(i, t)| PlotRow {
            t,
            rmssd_ref: ref_vals[i],
            rmssd_watch_raw: watch_vals[i],
            rmssd_watch_adjusted: adjusted[i],
            movement: movement[i],
        })
        .collect())
}

/// Write plot rows as CSV with the smoothing factor in a comment header.
pub fn write_plot_csv<W: Write>(mut w: W, rows: &[PlotRow], alpha: f64) -> io::Result<()> {
    writeln!(w, "# ema_alpha={alpha}")?;
    writeln!(w, "t_ms,rmssd_ref_ms,rmssd_watch_raw_ms,rmssd_watch_adjusted_ms,movement_g")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{}",
            r.t, r.rmssd_ref, r.rmssd_watch_raw, r.rmssd_watch_adjusted, r.movement
        )?;
    }
    Ok(())
}
