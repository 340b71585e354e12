//! Sampled waveforms and mono WAV I/O.

use std::path::Path;

use crate::error::{Error, Result};

/// Simulation rate of the synthesizer.
pub const SIM_RATE: u32 = 44_100;
/// Input rate of the classifiers.
pub const FCN_RATE: u32 = 8_000;

/// A sampled, single-channel waveform.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal {
    pub samples: Vec<f64>,
    /// Sampling rate in samples per second.
    pub rate: u32,
    /// Free-form provenance (generator, source file, ...).
    pub meta: String,
}

impl Signal {
    pub fn new(samples: Vec<f64>, rate: u32) -> Self {
        Signal {
            samples,
            rate,
            meta: String::new(),
        }
    }

    pub fn with_meta(mut self, meta: impl Into<String>) -> Self {
        self.meta = meta.into();
        self
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.rate as f64
    }

    pub fn is_finite(&self) -> bool {
        self.samples.iter().all(|x| x.is_finite())
    }

    pub fn mean(&self) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        self.samples.iter().sum::<f64>() / self.samples.len() as f64
    }

    /// Population variance.
    pub fn variance(&self) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        let m = self.mean();
        self.samples.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / self.samples.len() as f64
    }

    /// Writes a 32-bit float, single-channel RIFF/WAV file.
    pub fn write_wav(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let spec = hound::WavSpec {
            channels: 1,
            sample_rate: self.rate,
            bits_per_sample: 32,
            sample_format: hound::SampleFormat::Float,
        };
        let wrap = |source| Error::Wav {
            path: path.to_path_buf(),
            source,
        };
        let mut writer = hound::WavWriter::create(path, spec).map_err(wrap)?;
        for &x in &self.samples {
            writer.write_sample(x as f32).map_err(wrap)?;
        }
        writer.finalize().map_err(wrap)
    }

    /// Reads a WAV file of any integer or float sample format.
    ///
    /// Multi-channel files are reduced to mono by averaging the channels.
    pub fn read_wav(path: impl AsRef<Path>) -> Result<Signal> {
        let path = path.as_ref();
        let wrap = |source| Error::Wav {
            path: path.to_path_buf(),
            source,
        };
        let mut reader = hound::WavReader::open(path).map_err(wrap)?;
        let spec = reader.spec();
        let interleaved: Vec<f64> = match spec.sample_format {
            hound::SampleFormat::Float => reader
                .samples::<f32>()
                .map(|s| s.map(f64::from))
                .collect::<std::result::Result<_, _>>()
                .map_err(wrap)?,
            hound::SampleFormat::Int => {
                let scale = 1.0 / (1u64 << (spec.bits_per_sample - 1)) as f64;
                reader
                    .samples::<i32>()
                    .map(|s| s.map(|v| v as f64 * scale))
                    .collect::<std::result::Result<_, _>>()
                    .map_err(wrap)?
            }
        };
        let channels = spec.channels.max(1) as usize;
        let samples = if channels == 1 {
            interleaved
        } else {
            log::warn!(
                "{}: {} channels averaged to mono",
                path.display(),
                channels
            );
            interleaved
                .chunks_exact(channels)
                .map(|frame| frame.iter().sum::<f64>() / channels as f64)
                .collect()
        };
        if samples.is_empty() {
            return Err(Error::Analysis(format!("{}: no samples", path.display())));
        }
        Ok(Signal::new(samples, spec.sample_rate).with_meta(path.display().to_string()))
    }
}
