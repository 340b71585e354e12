//! Test-set evaluation and classification of arbitrary recordings.

use std::path::{Path, PathBuf};

use super::report::{
    accuracy_by_shr, accuracy_vs_fo, fo_table_csv, scores_csv, shr_table_csv, AccuracyBin,
    ConfusionMatrix, FoTrend, SignalScore, SnapshotReport,
};
use super::train::{batch_tensor, load_examples, one_hot_targets, Example};
use super::FcnModel;
use crate::dataset::{DatasetManifest, Split};
use crate::dsp::{normalize, resample_to, spectrogram, Spectrogram};
use crate::error::{Error, Result};
use crate::nn::{bce_with_logits, sigmoid};
use crate::signal::{Signal, FCN_RATE};

/// Default SHR bin width of the accuracy table (dB).
pub const DEFAULT_SHR_BIN_DB: f64 = 2.0;
/// Spectrogram frame of the recording classifier (40 ms at 8000 S/s).
pub const SPECTROGRAM_WINDOW: usize = 320;
/// Spectrogram hop, equal to the snapshot hop (2 ms).
pub const SPECTROGRAM_HOP: usize = 16;

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub confusion: ConfusionMatrix,
    pub scores: Vec<SignalScore>,
    /// Mean cell loss in inference mode.
    pub loss: f64,
}

impl Evaluation {
    pub fn accuracy(&self) -> f64 {
        self.confusion.accuracy()
    }

    pub fn shr_table(&self, bin_db: f64) -> Result<Vec<AccuracyBin>> {
        accuracy_by_shr(&self.scores, bin_db)
    }

    pub fn fo_trends(&self) -> Vec<FoTrend> {
        accuracy_vs_fo(&self.scores)
    }

    /// Writes `{prefix}confusion.csv`, `{prefix}shr_accuracy.csv`,
    /// `{prefix}fo_trend.csv` and `{prefix}signals.csv` into `dir`.
    pub fn write_reports(&self, dir: impl AsRef<Path>, prefix: &str, bin_db: f64) -> Result<Vec<PathBuf>> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let files = [
            ("confusion.csv", self.confusion.to_csv()),
            ("shr_accuracy.csv", shr_table_csv(&self.shr_table(bin_db)?)),
            ("fo_trend.csv", fo_table_csv(&self.fo_trends())),
            ("signals.csv", scores_csv(&self.scores)),
        ];
        let mut out = Vec::new();
        for (name, text) in files {
            let path = dir.join(format!("{prefix}{name}"));
            std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
            out.push(path);
        }
        Ok(out)
    }
}

/// Scores every example in inference mode, batching runs of equal length.
pub fn evaluate_examples(model: &FcnModel<f32>, examples: &[Example], batch_size: usize) -> Result<Evaluation> {
    let batch_size = batch_size.max(1);
    let mut confusion = ConfusionMatrix::default();
    let mut scores = Vec::with_capacity(examples.len());
    let (mut loss_sum, mut cells) = (0.0, 0usize);
    let mut start = 0;
    while start < examples.len() {
        let n = examples[start].samples.len();
        let mut end = start + 1;
        while end < examples.len() && end - start < batch_size && examples[end].samples.len() == n {
            end += 1;
        }
        let batch: Vec<&Example> = examples[start..end].iter().collect();
        let logits = model.logits(&batch_tensor(&batch)?)?;
        let labels: Vec<u32> = batch.iter().map(|e| e.m).collect();
        let (loss, _) = bce_with_logits(&logits, &one_hot_targets(&labels, logits.len()))?;
        loss_sum += loss * logits.numel() as f64;
        cells += logits.numel();
        let probs = logits.map(sigmoid);
        for (b, e) in batch.iter().enumerate() {
            let report = model.report(&probs, b);
            let predictions = report.predictions();
            confusion.add_all(e.m, &predictions);
            scores.push(SignalScore {
                id: e.id,
                m: e.m,
                fo: e.fo,
                shr_db: e.shr_db,
                snapshots: predictions.len() as u64,
                correct: predictions.iter().filter(|&&p| p == e.m).count() as u64,
                modal: report.modal().unwrap_or(0),
            });
        }
        start = end;
    }
    Ok(Evaluation {
        confusion,
        scores,
        loss: if cells == 0 { 0.0 } else { loss_sum / cells as f64 },
    })
}

/// Evaluates the manifest's test split.
pub fn evaluate(model: &FcnModel<f32>, manifest: &DatasetManifest, batch_size: usize) -> Result<Evaluation> {
    let test = load_examples(manifest, Split::Test)?;
    if test.is_empty() {
        return Err(Error::Dataset("manifest has no test records".into()));
    }
    evaluate_examples(model, &test, batch_size)
}

/// Snapshot report and spectrogram of one recording.
#[derive(Debug, Clone)]
pub struct Classification {
    /// The recording after resampling to 8000 S/s and normalization.
    pub signal: Signal,
    pub report: SnapshotReport,
    pub spectrogram: Spectrogram,
}

/// Resamples to 8000 S/s, normalizes over the whole duration and classifies.
pub fn classify_signal(model: &FcnModel<f32>, sig: &Signal) -> Result<Classification> {
    if sig.is_empty() {
        return Err(Error::Analysis("recording has no samples".into()));
    }
    let signal = normalize(&resample_to(sig, FCN_RATE))?;
    let report = model.infer(&signal)?;
    let spectrogram = spectrogram(&signal, SPECTROGRAM_WINDOW.min(signal.len()), SPECTROGRAM_HOP)?;
    Ok(Classification {
        signal,
        report,
        spectrogram,
    })
}

pub fn classify_recording(model: &FcnModel<f32>, wav: impl AsRef<Path>) -> Result<Classification> {
    classify_signal(model, &Signal::read_wav(wav)?)
}
