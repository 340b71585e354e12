//! Monte Carlo training data: parameter sampling, post-processing to the
//! classifier rate, ground-truth SHR and the on-disk manifest.

mod generate;
mod manifest;
mod params;
mod shr;

pub use generate::{
    generate_dataset, record_seed, synthesize_signal, DatasetSpec, GenerationReport, SplitSizes,
    MANIFEST_FILE, MAX_ATTEMPTS, RAW_DURATION,
};
pub use manifest::{DatasetManifest, DatasetRecord, Split};
pub use params::{ranges, sample_params, SynthParams};
pub use shr::{ground_truth_shr, SHR_BAND_LIMIT};

use crate::dsp::{normalize, resample_to};
use crate::error::{Error, Result};
use crate::signal::{Signal, FCN_RATE};

/// Samples discarded at the start of every processed signal (0.1 s).
pub const TRIM_SAMPLES: usize = 800;
/// Samples kept after trimming (1 s).
pub const KEEP_SAMPLES: usize = 8000;

/// Converts a raw synthesizer output into a training signal: resample to
/// 8000 S/s, drop the first 0.1 s, keep 1 s, normalize.
pub fn postprocess(raw: &Signal) -> Result<Signal> {
    let needed = (RAW_DURATION * raw.rate as f64).round() as usize;
    if raw.len() < needed {
        return Err(Error::Analysis(format!(
            "raw signal has {} samples, need {needed} (1.1 s at {} S/s)",
            raw.len(),
            raw.rate
        )));
    }
    let resampled = resample_to(raw, FCN_RATE);
    let kept = Signal {
        samples: resampled.samples[TRIM_SAMPLES..TRIM_SAMPLES + KEEP_SAMPLES].to_vec(),
        rate: FCN_RATE,
        meta: raw.meta.clone(),
    };
    normalize(&kept)
}
