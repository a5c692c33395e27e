//! Deterministic synthetic-wearer generator.
//!
//! Produces a ground-truth beat stream, a watch-like corrupted copy, and a
//! 25 Hz accelerometer trace for a configurable schedule of rest and
//! activity. Identical configs produce bit-identical sessions on every
//! platform: randomness comes from ChaCha8 with one dedicated stream per
//! noise source, and Gaussians are derived by a fixed Box-Muller
//! transform, so the draw sequence never depends on the sampled values.
//!
//! The corruption model follows how wrist optical sensors actually fail
//! under motion: the device's filtering suppresses beat-to-beat
//! variability (pulling intervals toward a running average), the reported
//! values pick up a slowly wandering bias, and individual beats drop out.
//! Suppression dominating means the watch under-reads RMSSD while moving,
//! so the reference-minus-watch error grows with movement.

use std::fs::File;
use std::io::{self, BufWriter};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::ingest::{self, AccelRecord, IbiRecord};

/// One activity span. Time outside every segment is rest (intensity 0).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActivitySegment {
    pub start_s: u32,
    pub end_s: u32,
    /// 0 = rest, 1 = hardest activity.
    pub intensity: f64,
}

/// Generator parameters. `Default` gives a resting wearer with plausible
/// mid-range heart-rate dynamics and watch corruption scaled for errors in
/// the tens of milliseconds at high intensity.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub seed: u64,
    pub duration_s: u32,
    /// Baseline inter-beat interval, ms.
    pub mean_ibi_ms: f64,
    /// Peak respiratory-sinus-arrhythmia swing, ms.
    pub rsa_amp_ms: f64,
    /// Breathing rate driving the swing, Hz.
    pub rsa_freq_hz: f64,
    /// Per-beat Gaussian jitter, ms.
    pub jitter_ms: f64,
    pub activity_profile: Vec<ActivitySegment>,
    /// Scale of the watch's wandering value bias, ms per unit intensity.
    pub corruption_noise_ms_per_intensity: f64,
    /// Per-beat dropout probability per unit intensity.
    pub dropout_prob_per_intensity: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            seed: 0,
            duration_s: 600,
            mean_ibi_ms: 850.0,
            rsa_amp_ms: 40.0,
            rsa_freq_hz: 0.25,
            jitter_ms: 15.0,
            activity_profile: Vec::new(),
            corruption_noise_ms_per_intensity: 120.0,
            dropout_prob_per_intensity: 0.3,
        }
    }
}

/// A complete generated recording.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthSession {
    pub true_ibi: Vec<IbiRecord>,
    pub watch_ibi: Vec<IbiRecord>,
    pub accel: Vec<AccelRecord>,
}

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("i/o failure")]
    Io(#[from] io::Error),
}

const IBI_CLAMP_MIN_MS: f64 = 300.0;
const IBI_CLAMP_MAX_MS: f64 = 1800.0;
/// Fraction of the wearer's variability the watch filter eats per unit
/// intensity.
const SUPPRESSION_PER_INTENSITY: f64 = 0.9;
/// Smoothing constant of the filter's running interval average.
const WATCH_EMA_ALPHA: f64 = 0.08;
/// Seconds between redraws of the watch value bias.
const BIAS_HOLD_S: f64 = 45.0;
/// Period of the slow envelope on the RSA amplitude, s. Without it the
/// ground-truth RMSSD would be a near constant and correlations against
/// the reference series would be meaningless.
const RSA_ENVELOPE_PERIOD_S: f64 = 1200.0;
const ACCEL_HZ: i64 = 25;
/// Arm-swing frequency for the intensity-scaled magnitude oscillation.
const SWING_HZ: f64 = 1.1;

/// Standard Gaussian via Box-Muller; always exactly two uniform draws.
fn gauss(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = rng.random();
    let u2: f64 = rng.random();
    (-2.0 * (1.0 - u1).ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

fn validate(config: &SynthConfig) -> Result<(), SynthError> {
    if config.duration_s == 0 {
        return Err(SynthError::InvalidConfig("duration_s must be positive".into()));
    }
    for p in [
        ("mean_ibi_ms", config.mean_ibi_ms),
        ("rsa_amp_ms", config.rsa_amp_ms),
        ("rsa_freq_hz", config.rsa_freq_hz),
        ("jitter_ms", config.jitter_ms),
        ("corruption_noise_ms_per_intensity", config.corruption_noise_ms_per_intensity),
        ("dropout_prob_per_intensity", config.dropout_prob_per_intensity),
    ] {
        if !p.1.is_finite() || p.1 < 0.0 {
            return Err(SynthError::InvalidConfig(format!("{} must be finite and >= 0", p.0)));
        }
    }
    if config.mean_ibi_ms <= 0.0 {
        return Err(SynthError::InvalidConfig("mean_ibi_ms must be positive".into()));
    }
    if config.dropout_prob_per_intensity > 1.0 {
        return Err(SynthError::InvalidConfig("dropout_prob_per_intensity must be <= 1".into()));
    }
    let mut sorted = config.activity_profile.clone();
    sorted.sort_by_key(|s| s.start_s);
    for seg in &sorted {
        if seg.start_s >= seg.end_s {
            return Err(SynthError::InvalidConfig(format!(
                "segment {}..{} is empty or reversed",
                seg.start_s, seg.end_s
            )));
        }
        if !(0.0..=1.0).contains(&seg.intensity) || !seg.intensity.is_finite() {
            return Err(SynthError::InvalidConfig(format!(
                "intensity {} outside [0, 1]",
                seg.intensity
            )));
        }
    }
    for pair in sorted.windows(2) {
        if pair[1].start_s < pair[0].end_s {
            return Err(SynthError::InvalidConfig(format!(
                "segments {}..{} and {}..{} overlap",
                pair[0].start_s, pair[0].end_s, pair[1].start_s, pair[1].end_s
            )));
        }
    }
    Ok(())
}

/// Activity intensity at a moment, from a start-sorted profile.
fn intensity_at(profile: &[ActivitySegment], t_s: f64) -> f64 {
    let after = profile.partition_point(|seg| f64::from(seg.start_s) <= t_s);
    if after == 0 {
        return 0.0;
    }
    let seg = &profile[after - 1];
    if t_s < f64::from(seg.end_s) {
        seg.intensity
    } else {
        0.0
    }
}

/// Generate a full session from a config. Deterministic: equal configs
/// give equal sessions bit-for-bit.
pub fn generate(config: &SynthConfig) -> Result<SynthSession, SynthError> {
    validate(config)?;
    let mut profile = config.activity_profile.clone();
    profile.sort_by_key(|s| s.start_s);
    let duration_ms = i64::from(config.duration_s) * 1000;

    let mut jitter_rng = ChaCha8Rng::seed_from_u64(config.seed);
    jitter_rng.set_stream(0);
    let mut accel_rng = ChaCha8Rng::seed_from_u64(config.seed);
    accel_rng.set_stream(1);
    let mut value_rng = ChaCha8Rng::seed_from_u64(config.seed);
    value_rng.set_stream(2);
    let mut dropout_rng = ChaCha8Rng::seed_from_u64(config.seed);
    dropout_rng.set_stream(3);

    // Beat streams. The true interval follows a breathing sinusoid whose
    // amplitude itself drifts on a 20-minute cycle, plus white jitter.
    let mut true_ibi = Vec::new();
    let mut watch_ibi = Vec::new();
    let mut t_ms = 0.0f64;
    let mut ema = config.mean_ibi_ms;
    let mut bias = 0.0f64;
    let mut next_bias_redraw_ms = 0.0f64;
    loop {
        let t_s = t_ms / 1000.0;
        let envelope = 1.0 + 0.5 * (std::f64::consts::TAU * t_s / RSA_ENVELOPE_PERIOD_S).sin();
        let ibi = (config.mean_ibi_ms
            + config.rsa_amp_ms * envelope * (std::f64::consts::TAU * config.rsa_freq_hz * t_s).sin()
            + gauss(&mut jitter_rng) * config.jitter_ms)
            .clamp(IBI_CLAMP_MIN_MS, IBI_CLAMP_MAX_MS);
        t_ms += ibi;
        if t_ms > duration_ms as f64 {
            break;
        }
        let t = t_ms.round() as i64;
        true_ibi.push(IbiRecord { t, ibi });

        // Watch-side corruption. One value draw and one dropout draw per
        // beat regardless of intensity, so the stream stays aligned
        // across activity profiles.
        let g = gauss(&mut value_rng);
        let u: f64 = dropout_rng.random();
        let i = intensity_at(&profile, t_ms / 1000.0);
        if t_ms >= next_bias_redraw_ms {
            bias = g * config.corruption_noise_ms_per_intensity * i;
            next_bias_redraw_ms = t_ms + BIAS_HOLD_S * 1000.0;
        }
        ema += WATCH_EMA_ALPHA * (ibi - ema);
        let s = (SUPPRESSION_PER_INTENSITY * i).min(0.95);
        if u >= config.dropout_prob_per_intensity * i {
            let v = (ibi + s * (ema - ibi) + bias).max(50.0);
            watch_ibi.push(IbiRecord { t, ibi: v });
        }
    }

    // Accelerometer: gravity-scale magnitude with an intensity-driven
    // swing plus sensor noise, pointed along a slowly precessing axis.
    let n_accel = i64::from(config.duration_s) * ACCEL_HZ + 1;
    let mut accel = Vec::with_capacity(n_accel as usize);
    for k in 0..n_accel {
        let t = k * (1000 / ACCEL_HZ);
        let t_s = t as f64 / 1000.0;
        let i = intensity_at(&profile, t_s);
        let g = gauss(&mut accel_rng);
        let m = 1.0
            + 0.25 * i * (std::f64::consts::TAU * SWING_HZ * t_s).sin()
            + g * (0.004 + 0.02 * i);
        let theta = std::f64::consts::TAU * 0.010 * t_s;
        let phi = std::f64::consts::TAU * 0.003 * t_s;
        accel.push(AccelRecord {
            t,
            ax: m * theta.sin() * phi.cos(),
            ay: m * theta.sin() * phi.sin(),
            az: m * theta.cos(),
        });
    }

    Ok(SynthSession { true_ibi, watch_ibi, accel })
}

/// File names written by [`export`].
pub const REF_IBI_FILE: &str = "ref_ibi.csv";
pub const WATCH_IBI_FILE: &str = "watch_ibi.csv";
pub const ACCEL_FILE: &str = "accel.csv";

/// Write a session as `ref_ibi.csv`, `watch_ibi.csv`, and `accel.csv`
/// under `dir`. Re-ingesting the files reproduces the session exactly.
pub fn export(session: &SynthSession, dir: &Path) -> Result<(), SynthError> {
    let open = |name: &str| -> io::Result<BufWriter<File>> {
        Ok(BufWriter::new(File::create(dir.join(name))?))
    };
    ingest::write_ibi_csv(open(REF_IBI_FILE)?, &session.true_ibi)?;
    ingest::write_ibi_csv(open(WATCH_IBI_FILE)?, &session.watch_ibi)?;
    ingest::write_accel_csv(open(ACCEL_FILE)?, &session.accel)?;
    Ok(())
}

/// Parse an activity profile written as comma-separated
/// `start_s:end_s:intensity` triples, e.g. `"0:600:0.0,600:1200:0.7"`.
/// An empty string is an empty profile. Validation (ordering, overlap,
/// ranges) happens in [`generate`]; this only requires well-formed
/// numbers.
pub fn parse_activity_profile(text: &str) -> Result<Vec<ActivitySegment>, SynthError> {
    let text = text.trim();
    if text.is_empty() {
        return Ok(Vec::new());
    }
    let mut segments = Vec::new();
    for part in text.split(',') {
        let fields: Vec<&str> = part.trim().split(':').collect();
        let parsed = if fields.len() == 3 {
            let start = fields[0].trim().parse::<u32>().ok();
            let end = fields[1].trim().parse::<u32>().ok();
            let intensity = fields[2].trim().parse::<f64>().ok();
            match (start, end, intensity) {
                (Some(s), Some(e), Some(i)) => Some(ActivitySegment { start_s: s, end_s: e, intensity: i }),
                _ => None,
            }
        } else {
            None
        };
        match parsed {
            Some(seg) => segments.push(seg),
            None => {
                return Err(SynthError::InvalidConfig(format!(
                    "bad profile segment '{}': expected start_s:end_s:intensity",
                    part.trim()
                )))
            }
        }
    }
    Ok(segments)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mixed_config(seed: u64, duration_s: u32) -> SynthConfig {
        let mut profile = Vec::new();
        let mut t = 0;
        while t + 1800 <= duration_s {
            profile.push(ActivitySegment { start_s: t + 1200, end_s: t + 1800, intensity: 0.7 });
            t += 1800;
        }
        SynthConfig { seed, duration_s, activity_profile: profile, ..SynthConfig::default() }
    }

    #[test]
    fn zero_intensity_watch_equals_truth() {
        let session = generate(&SynthConfig { seed: 9, ..SynthConfig::default() }).unwrap();
        assert_eq!(session.watch_ibi, session.true_ibi);
    }

    #[test]
    fn same_seed_same_session() {
        let config = mixed_config(4, 3600);
        let a = generate(&config).unwrap();
        let b = generate(&config).unwrap();
        assert_eq!(a, b);
        assert_eq!(
            ingest::serialize_ibi_csv(&a.watch_ibi),
            ingest::serialize_ibi_csv(&b.watch_ibi)
        );
    }

    #[test]
    fn different_seed_different_session() {
        let a = generate(&SynthConfig { seed: 1, ..SynthConfig::default() }).unwrap();
        let b = generate(&SynthConfig { seed: 2, ..SynthConfig::default() }).unwrap();
        assert_ne!(a.true_ibi, b.true_ibi);
    }

    #[test]
    fn beat_count_in_expected_range() {
        let session = generate(&SynthConfig { seed: 3, ..SynthConfig::default() }).unwrap();
        let n = session.true_ibi.len();
        assert!((600..=820).contains(&n), "beat count {n}");
    }

    #[test]
    fn timestamps_strictly_increasing() {
        let session = generate(&mixed_config(5, 3600)).unwrap();
        for pair in session.true_ibi.windows(2) {
            assert!(pair[0].t < pair[1].t);
        }
        for pair in session.watch_ibi.windows(2) {
            assert!(pair[0].t < pair[1].t);
        }
    }

    #[test]
    fn accel_covers_duration_at_25hz() {
        let config = SynthConfig { seed: 3, ..SynthConfig::default() };
        let session = generate(&config).unwrap();
        assert_eq!(session.accel.len(), 600 * 25 + 1);
        assert_eq!(session.accel.first().unwrap().t, 0);
        assert_eq!(session.accel.last().unwrap().t, 600_000);
    }

    #[test]
    fn dropout_thins_watch_stream_under_activity() {
        let config = SynthConfig {
            seed: 6,
            duration_s: 1200,
            activity_profile: vec![ActivitySegment { start_s: 0, end_s: 1200, intensity: 1.0 }],
            ..SynthConfig::default()
        };
        let session = generate(&config).unwrap();
        let kept = session.watch_ibi.len() as f64 / session.true_ibi.len() as f64;
        // Dropout probability is 0.3 at intensity 1.
        assert!((0.62..0.78).contains(&kept), "kept fraction {kept}");
    }

    #[test]
    fn invalid_configs_rejected() {
        let zero = SynthConfig { duration_s: 0, ..SynthConfig::default() };
        assert!(matches!(generate(&zero), Err(SynthError::InvalidConfig(_))));

        let bad_intensity = SynthConfig {
            activity_profile: vec![ActivitySegment { start_s: 0, end_s: 10, intensity: 1.5 }],
            ..SynthConfig::default()
        };
        assert!(matches!(generate(&bad_intensity), Err(SynthError::InvalidConfig(_))));

        let overlap = SynthConfig {
            activity_profile: vec![
                ActivitySegment { start_s: 0, end_s: 100, intensity: 0.5 },
                ActivitySegment { start_s: 50, end_s: 150, intensity: 0.5 },
            ],
            ..SynthConfig::default()
        };
        assert!(matches!(generate(&overlap), Err(SynthError::InvalidConfig(_))));

        let reversed = SynthConfig {
            activity_profile: vec![ActivitySegment { start_s: 100, end_s: 100, intensity: 0.5 }],
            ..SynthConfig::default()
        };
        assert!(matches!(generate(&reversed), Err(SynthError::InvalidConfig(_))));
    }

    #[test]
    fn export_reingest_round_trip() {
        use crate::ingest::SourceTag;
        let dir = tempfile::tempdir().unwrap();
        let session = generate(&mixed_config(7, 1800)).unwrap();
        export(&session, dir.path()).unwrap();
        let true_back = ingest::parse_ibi_csv(
            &std::fs::read(dir.path().join(REF_IBI_FILE)).unwrap(),
            SourceTag::Reference,
        )
        .unwrap();
        let watch_back = ingest::parse_ibi_csv(
            &std::fs::read(dir.path().join(WATCH_IBI_FILE)).unwrap(),
            SourceTag::Watch,
        )
        .unwrap();
        let accel_back =
            ingest::parse_accel_csv(&std::fs::read(dir.path().join(ACCEL_FILE)).unwrap()).unwrap();
        assert_eq!(true_back.records, session.true_ibi);
        assert_eq!(watch_back.records, session.watch_ibi);
        assert_eq!(accel_back, session.accel);
    }

    #[test]
    fn export_to_unwritable_dir_fails() {
        let missing = Path::new("/nonexistent-dir-for-synth-test");
        let session = generate(&SynthConfig::default()).unwrap();
        assert!(matches!(export(&session, missing), Err(SynthError::Io(_))));
    }

    #[test]
    fn profile_parses_and_rejects() {
        let segs = parse_activity_profile("0:600:0.0, 600:1200:0.7").unwrap();
        assert_eq!(
            segs,
            vec![
                ActivitySegment { start_s: 0, end_s: 600, intensity: 0.0 },
                ActivitySegment { start_s: 600, end_s: 1200, intensity: 0.7 },
            ]
        );
        assert!(parse_activity_profile("").unwrap().is_empty());
        assert!(parse_activity_profile("1:2").is_err());
        assert!(parse_activity_profile("a:b:c").is_err());
        assert!(parse_activity_profile("0:600:0.0,oops").is_err());
    }

    #[test]
    fn intensity_lookup_respects_segments() {
        let profile = vec![
            ActivitySegment { start_s: 100, end_s: 200, intensity: 0.4 },
            ActivitySegment { start_s: 300, end_s: 400, intensity: 0.9 },
        ];
        assert_eq!(intensity_at(&profile, 50.0), 0.0);
        assert_eq!(intensity_at(&profile, 100.0), 0.4);
        assert_eq!(intensity_at(&profile, 199.9), 0.4);
        assert_eq!(intensity_at(&profile, 200.0), 0.0);
        assert_eq!(intensity_at(&profile, 350.0), 0.9);
        assert_eq!(intensity_at(&profile, 400.0), 0.0);
    }

    #[test]
    fn watch_under_reads_variability_during_activity() {
        use crate::hrv::{self, WindowParams};
        let config = mixed_config(11, 7200);
        let session = generate(&config).unwrap();
        let params = WindowParams::default();
        let ref_series = hrv::rmssd_series(&session.true_ibi, &params).unwrap();
        let watch_series = hrv::rmssd_series(&session.watch_ibi, &params).unwrap();
        let movement = hrv::movement_series(&session.accel, 60, 1).unwrap();
        let frames = hrv::align(&ref_series, &watch_series, &movement, 500);
        assert!(frames.len() > 1000, "only {} frames", frames.len());

        let active: Vec<f64> =
            frames.iter().filter(|f| f.movement > 0.08).map(|f| f.error).collect();
        let rest: Vec<f64> =
            frames.iter().filter(|f| f.movement < 0.02).map(|f| f.error).collect();
        assert!(active.len() > 100 && rest.len() > 100);
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        assert!(
            mean(&active) > 10.0,
            "active-period error should be positive, got {}",
            mean(&active)
        );
        assert!(mean(&rest).abs() < 5.0, "rest error should be near zero, got {}", mean(&rest));
    }
}
