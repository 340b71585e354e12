//! Signal-processing utilities shared by the synthesizer, the dataset
//! builder and the recording classifier.

mod resample;
mod spectrum;

pub use resample::{resample, resample_to, Resampler};
pub use spectrum::{
    periodogram, spectrogram, to_db, welch, Spectrogram, Spectrum, Window, MIN_PERIODOGRAM_LEN,
};

use crate::error::{Error, Result};
use crate::signal::Signal;

/// Relative standard deviation below which a signal counts as constant.
const DEGENERATE_STD: f64 = 1e-10;

/// Removes the mean and scales to unit (population) variance.
pub fn normalize(sig: &Signal) -> Result<Signal> {
    let mean = sig.mean();
    let std = sig.variance().sqrt();
    if sig.is_empty() || !std.is_finite() || std <= DEGENERATE_STD * mean.abs() || std == 0.0 {
        return Err(Error::DegenerateVariance);
    }
    Ok(Signal {
        samples: sig.samples.iter().map(|x| (x - mean) / std).collect(),
        rate: sig.rate,
        meta: sig.meta.clone(),
    })
}
