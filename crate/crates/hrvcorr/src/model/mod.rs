//! Error-regression model: feature extraction, the convolutional network
//! with hand-derived gradients, Adam training, and weight-file I/O.

pub mod features;
pub mod net;
pub mod train;
pub mod weights_io;

pub use features::{
    build_raw_samples, build_samples, fit_stats, normalize_sample, sample_for_frame, split_index,
    Dataset, ModelError, NormStats, RawSample, TrainingSample, CHANNELS, INPUT_LEN, WIDTH,
};
pub use net::{forward, init_weights, loss_and_grad, ModelWeights, Tensor, TENSOR_SPECS};
pub use train::{mean_loss, train, EpochStats, TrainConfig};
pub use weights_io::{load_weights, save_weights};

/// Apply a predicted error to a watch RMSSD reading. RMSSD is nonnegative
/// by definition, so the adjusted value clamps at zero.
///
/// ```
/// use hrvcorr::model::correct;
///
/// assert_eq!(correct(30.0, 5.0), 35.0);
/// assert_eq!(correct(30.0, -5.0), 25.0);
/// assert_eq!(correct(3.0, -10.0), 0.0);
/// ```
pub fn correct(rmssd_watch: f64, predicted_error: f64) -> f64 {
    (rmssd_watch + predicted_error).max(0.0)
}
