//! Heart-rate-variability correction toolkit for wrist wearables.
//!
//! Consumer smartwatches derive inter-beat intervals from an optical sensor
//! that degrades badly while the wearer moves. This crate quantifies that
//! degradation against a chest-strap reference and trains a small 1D
//! convolutional regressor that predicts the per-window RMSSD error from
//! recent watch data and accelerometer movement, so the error can be added
//! back out.
//!
//! The crate is organized as a data pipeline:
//!
//! - [`ingest`]: CSV parsing, validation, and interval-plausibility cleaning.
//! - [`hrv`]: sliding-window RMSSD, movement indexing, clock-offset
//!   estimation, and cross-device frame alignment.
//! - [`stats`]: Pearson correlation with Student-t significance, RMSE.
//! - [`synth`]: a deterministic synthetic-wearer generator for tests and
//!   desk-scale experiments.
//! - [`model`]: the convolutional error regressor, its training loop, and
//!   the weight-file format.
//! - [`pipeline`]: end-to-end orchestration shared by the CLI.

pub mod hrv;
pub mod ingest;
pub mod model;
pub mod pipeline;
pub mod stats;
pub mod synth;
