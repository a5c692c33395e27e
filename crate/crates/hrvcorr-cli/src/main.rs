//! `hrvcorr`: generate, inspect, and correct wrist-worn HRV recordings.
//!
//! Every failure prints one `error[E<code>]: ...` line to stderr and exits
//! with that code: 2 bad arguments, 3 I/O or parse, 4 insufficient data,
//! 5 too few training samples, 6 weight shape or version mismatch.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use hrvcorr::hrv::WindowParams;
use hrvcorr::model::{self, TrainConfig};
use hrvcorr::pipeline::{self, PipelineError, Session};
use hrvcorr::synth::{self, ActivitySegment, SynthConfig};

#[derive(Parser)]
#[command(name = "hrvcorr", version, about = "Smartwatch HRV error analysis and correction")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct SessionArgs {
    /// Reference (chest strap) IBI CSV.
    #[arg(long = "ref")]
    ref_ibi: PathBuf,
    /// Watch IBI CSV.
    #[arg(long = "watch")]
    watch_ibi: PathBuf,
    /// Watch accelerometer CSV.
    #[arg(long)]
    accel: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic two-device recording.
    Synth {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Recording length in seconds.
        #[arg(long, default_value_t = 21_600)]
        duration: u32,
        /// Comma-separated `start_s:end_s:intensity` segments. Defaults to
        /// 20 min rest / 10 min activity at 0.7, repeating.
        #[arg(long)]
        profile: Option<String>,
        /// Directory for ref_ibi.csv, watch_ibi.csv, accel.csv.
        #[arg(long)]
        out: PathBuf,
    },
    /// Report watch error and its correlation with movement.
    Analyze {
        #[command(flatten)]
        session: SessionArgs,
    },
    /// Train the error regressor and write a weight file.
    Train {
        #[command(flatten)]
        session: SessionArgs,
        #[arg(long)]
        weights_out: PathBuf,
        /// Per-epoch loss CSV. Defaults to `<WEIGHTS_OUT>.history.csv`.
        #[arg(long)]
        history_out: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 12)]
        epochs: usize,
        #[arg(long, default_value_t = 64, value_parser = parse_nonzero)]
        batch_size: usize,
        #[arg(long, default_value_t = 1e-3, value_parser = parse_positive)]
        lr: f64,
        /// Earliest fraction of samples to train on.
        #[arg(long, default_value_t = 0.8, value_parser = parse_fraction_open)]
        split: f64,
    },
    /// Evaluate a weight file on the held-out test split.
    Eval {
        #[command(flatten)]
        session: SessionArgs,
        #[arg(long)]
        weights: PathBuf,
        /// Also write the report as `key=value` lines.
        #[arg(long)]
        report_out: Option<PathBuf>,
        #[arg(long, default_value_t = 0.8, value_parser = parse_fraction_open)]
        split: f64,
    },
    /// Export reference/raw/corrected RMSSD and movement as plot CSV.
    PlotExport {
        #[command(flatten)]
        session: SessionArgs,
        #[arg(long)]
        weights: PathBuf,
        /// EMA smoothing factor in (0, 1]; 1 disables smoothing.
        #[arg(long, default_value_t = 0.05, value_parser = parse_fraction_half_open)]
        ema: f64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn parse_nonzero(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(v) if v >= 1 => Ok(v),
        Ok(_) => Err("must be at least 1".to_string()),
        Err(e) => Err(e.to_string()),
    }
}

fn parse_positive(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v.is_finite() => Ok(v),
        Ok(_) => Err("must be a positive number".to_string()),
        Err(e) => Err(e.to_string()),
    }
}

fn parse_fraction_open(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v < 1.0 => Ok(v),
        Ok(_) => Err("must be strictly between 0 and 1".to_string()),
        Err(e) => Err(e.to_string()),
    }
}

fn parse_fraction_half_open(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v <= 1.0 => Ok(v),
        Ok(_) => Err("must be in (0, 1]".to_string()),
        Err(e) => Err(e.to_string()),
    }
}

/// 20 minutes of rest then 10 minutes at intensity 0.7, repeating; the
/// trailing partial cycle stays at rest.
fn default_profile(duration_s: u32) -> Vec<ActivitySegment> {
    let mut profile = Vec::new();
    let mut t = 0;
    while t + 1800 <= duration_s {
        profile.push(ActivitySegment { start_s: t + 1200, end_s: t + 1800, intensity: 0.7 });
        t += 1800;
    }
    profile
}

fn load(session: &SessionArgs) -> Result<(Session, pipeline::FrameSet), PipelineError> {
    let s = pipeline::load_session(&session.ref_ibi, &session.watch_ibi, &session.accel)?;
    let frames = pipeline::compute_frames(&s, &WindowParams::default())?;
    Ok((s, frames))
}

fn load_weight_file(path: &PathBuf) -> Result<model::ModelWeights, PipelineError> {
    let bytes = fs::read(path)?;
    model::load_weights(&bytes).map_err(PipelineError::Model)
}

fn run(command: Command) -> Result<(), PipelineError> {
    match command {
        Command::Synth { seed, duration, profile, out } => {
            let activity_profile = match profile {
                Some(text) => synth::parse_activity_profile(&text)?,
                None => default_profile(duration),
            };
            let config = SynthConfig {
                seed,
                duration_s: duration,
                activity_profile,
                ..SynthConfig::default()
            };
            let session = synth::generate(&config)?;
            fs::create_dir_all(&out)?;
            synth::export(&session, &out)?;
            println!("duration_s={duration}");
            println!("ref_beats={}", session.true_ibi.len());
            println!("watch_beats={}", session.watch_ibi.len());
            println!("accel_samples={}", session.accel.len());
            for seg in &config.activity_profile {
                println!("segment={}:{}:{}", seg.start_s, seg.end_s, seg.intensity);
            }
            for name in [synth::REF_IBI_FILE, synth::WATCH_IBI_FILE, synth::ACCEL_FILE] {
                println!("file={name} bytes={}", fs::metadata(out.join(name))?.len());
            }
            Ok(())
        }
        Command::Analyze { session } => {
            let (s, frames) = load(&session)?;
            let report = pipeline::analyze(&s, &frames)?;
            print!("{}", pipeline::render_analyze(&report));
            Ok(())
        }
        Command::Train { session, weights_out, history_out, seed, epochs, batch_size, lr, split } => {
            let (s, frames) = load(&session)?;
            let dataset = model::build_samples(
                &frames.frames,
                &s.watch_ibi,
                &frames.watch_series,
                &frames.movement,
                split,
            );
            let cfg = TrainConfig {
                seed,
                epochs,
                batch_size,
                learning_rate: lr,
                split_fraction: split,
                ..TrainConfig::default()
            };
            let (weights, history) =
                model::train(&dataset.samples, dataset.stats, &cfg).map_err(PipelineError::Model)?;
            fs::write(&weights_out, model::save_weights(&weights))?;
            let history_path = history_out
                .unwrap_or_else(|| PathBuf::from(format!("{}.history.csv", weights_out.display())));
            let mut h = String::from("epoch,train_loss,val_loss\n");
            for e in &history {
                h.push_str(&format!("{},{},{}\n", e.epoch, e.train_loss, e.val_loss));
            }
            fs::write(&history_path, h)?;
            println!("samples={}", dataset.samples.len());
            for e in &history {
                println!("epoch={} train_loss={} val_loss={}", e.epoch, e.train_loss, e.val_loss);
            }
            println!("weights={}", weights_out.display());
            println!("history={}", history_path.display());
            Ok(())
        }
        Command::Eval { session, weights, report_out, split } => {
            let (s, frames) = load(&session)?;
            let w = load_weight_file(&weights)?;
            let report = pipeline::evaluate(&frames, &s.watch_ibi, &w, split)?;
            let text = pipeline::render_eval(&report);
            print!("{text}");
            if let Some(path) = report_out {
                fs::write(path, text.as_bytes())?;
            }
            Ok(())
        }
        Command::PlotExport { session, weights, ema, out } => {
            let (s, frames) = load(&session)?;
            let w = load_weight_file(&weights)?;
            let rows = pipeline::plot_series(&frames, &s.watch_ibi, &w, ema)?;
            let file = BufWriter::new(File::create(&out)?);
            pipeline::write_plot_csv(file, &rows, ema)?;
            println!("rows={}", rows.len());
            println!("plot={}", out.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let code = pipeline::exit_code(&err);
            eprintln!("error[E{code}]: {err}");
            ExitCode::from(code as u8)
        }
    }
}
