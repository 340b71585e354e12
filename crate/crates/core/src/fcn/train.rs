//! Mini-batch training with input dropout, Adam and best-validation selection.

use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{evaluate_examples, FcnModel, NUM_CLASSES};
use crate::dataset::{DatasetManifest, Split};
use crate::error::{Error, Result};
use crate::nn::{bce_with_logits, AdamConfig, AdamState, Dropout, Module, Tensor};
use crate::signal::{Signal, FCN_RATE};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    /// Signals per mini-batch.
    pub batch_size: usize,
    pub epochs: usize,
    /// Dropout rate applied to the input samples during training.
    pub input_dropout: f64,
    /// Seeds shuffling and dropout masks.
    pub seed: u64,
    pub adam: AdamConfig,
    /// Training signals used to re-estimate batch-norm statistics without
    /// dropout after each epoch; 0 keeps the exponential running averages.
    pub bn_recalibration: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            batch_size: 32,
            epochs: 20,
            input_dropout: 0.2,
            seed: 0,
            adam: AdamConfig::default(),
            bn_recalibration: 512,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |field: &'static str, reason: String| Err(Error::InvalidParam { field, reason });
        if self.batch_size == 0 {
            return bad("batch_size", "must be at least 1".into());
        }
        if self.epochs == 0 {
            return bad("epochs", "must be at least 1; there is no epoch to select".into());
        }
        if !(0.0..1.0).contains(&self.input_dropout) {
            return bad("input_dropout", format!("{} is outside [0, 1)", self.input_dropout));
        }
        let a = &self.adam;
        if !(a.lr > 0.0 && a.lr.is_finite()) {
            return bad("lr", format!("must be positive, got {}", a.lr));
        }
        if !(0.0..1.0).contains(&a.beta1) || !(0.0..1.0).contains(&a.beta2) {
            return bad("beta", format!("betas must lie in [0, 1), got {} and {}", a.beta1, a.beta2));
        }
        if !(a.eps > 0.0) {
            return bad("eps", format!("must be positive, got {}", a.eps));
        }
        Ok(())
    }
}

/// One labelled 8000 S/s signal held in single precision.
#[derive(Debug, Clone, PartialEq)]
pub struct Example {
    pub id: u64,
    pub m: u32,
    pub fo: f64,
    pub shr_db: Option<f64>,
    pub samples: Vec<f32>,
}

impl Example {
    pub fn from_signal(id: u64, m: u32, fo: f64, shr_db: Option<f64>, sig: &Signal) -> Result<Self> {
        if !(1..=NUM_CLASSES as u32).contains(&m) {
            return Err(Error::Dataset(format!("record {id}: label M={m} is outside 1..=4")));
        }
        if sig.rate != FCN_RATE {
            return Err(Error::Dataset(format!(
                "record {id}: sampled at {} S/s, expected {FCN_RATE}",
                sig.rate
            )));
        }
        Ok(Example {
            id,
            m,
            fo,
            shr_db,
            samples: sig.samples.iter().map(|&v| v as f32).collect(),
        })
    }
}

/// Reads every signal of one split.
pub fn load_examples(manifest: &DatasetManifest, split: Split) -> Result<Vec<Example>> {
    manifest
        .split(split)
        .into_iter()
        .map(|r| {
            let sig = Signal::read_wav(manifest.path_of(r))?;
            Example::from_signal(r.id, r.m, r.fo, r.shr_db, &sig)
        })
        .collect()
}

/// Stacks examples of equal length into a `(batch, 1, N)` tensor.
pub fn batch_tensor(examples: &[&Example]) -> Result<Tensor<f32>> {
    let n = examples.first().map_or(0, |e| e.samples.len());
    if let Some(e) = examples.iter().find(|e| e.samples.len() != n) {
        return Err(Error::Shape(format!(
            "record {} has {} samples; a batch needs equal lengths ({n})",
            e.id,
            e.samples.len()
        )));
    }
    let data = examples.iter().flat_map(|e| e.samples.iter().copied()).collect();
    Tensor::new([examples.len(), 1, n], data)
}

/// One-hot period targets repeated over `snapshots` columns.
pub fn one_hot_targets(labels: &[u32], snapshots: usize) -> Tensor<f32> {
    let mut t = Tensor::zeros(labels.len(), NUM_CLASSES, snapshots);
    for (b, &m) in labels.iter().enumerate() {
        let row = (b * NUM_CLASSES + m as usize - 1) * snapshots;
        t.data_mut()[row..row + snapshots].fill(1.0);
    }
    t
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochMetrics {
    pub epoch: usize,
    /// Mean cell loss over the epoch's training batches, in training mode.
    pub train_loss: f64,
    /// Snapshot accuracy of the training batches, in training mode.
    pub train_accuracy: f64,
    pub val_loss: f64,
    pub val_accuracy: f64,
    pub seconds: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Weights of the epoch with the best validation accuracy.
    pub model: FcnModel<f32>,
    pub best_epoch: usize,
    pub metrics: Vec<EpochMetrics>,
    /// Loss of the first batch before any update, summed over the four classes.
    pub initial_snapshot_loss: f64,
}

impl TrainOutcome {
    pub fn best(&self) -> &EpochMetrics {
        &self.metrics[self.best_epoch - 1]
    }
}

/// CSV with header `epoch,train_loss,train_accuracy,val_loss,val_accuracy,seconds`.
pub fn metrics_csv(metrics: &[EpochMetrics]) -> String {
    let mut out = String::from("epoch,train_loss,train_accuracy,val_loss,val_accuracy,seconds\n");
    for m in metrics {
        let _ = writeln!(
            out,
            "{},{:.6},{:.6},{:.6},{:.6},{:.2}",
            m.epoch, m.train_loss, m.train_accuracy, m.val_loss, m.val_accuracy, m.seconds
        );
    }
    out
}

pub fn write_metrics_csv(metrics: &[EpochMetrics], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, metrics_csv(metrics)).map_err(|e| Error::io(path, e))
}

/// Trains on the manifest's train split, selecting by validation accuracy.
pub fn train(model: FcnModel<f32>, manifest: &DatasetManifest, cfg: &TrainConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    let train_set = load_examples(manifest, Split::Train)?;
    let val_set = load_examples(manifest, Split::Val)?;
    train_examples(model, &train_set, &val_set, cfg)
}

fn epoch_seed(seed: u64, epoch: usize) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ epoch as u64
}

/// Trains on in-memory examples. Every batch is a full forward, BCE against
/// one-hot targets at every snapshot, backward and one Adam step.
pub fn train_examples(
    mut model: FcnModel<f32>,
    train_set: &[Example],
    val_set: &[Example],
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    if train_set.is_empty() || val_set.is_empty() {
        return Err(Error::Training(format!(
            "need non-empty train and validation splits (got {} and {})",
            train_set.len(),
            val_set.len()
        )));
    }
    let window = model.window();
    if let Some(e) = train_set.iter().chain(val_set).find(|e| e.samples.len() < window) {
        return Err(Error::Training(format!(
            "record {} has {} samples, shorter than the {window}-sample window",
            e.id,
            e.samples.len()
        )));
    }

    let mut adam = AdamState::new(cfg.adam);
    let mut dropout = Dropout::<f32>::new(cfg.input_dropout, cfg.seed ^ 0xD80_u64)?;
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut metrics = Vec::with_capacity(cfg.epochs);
    let mut best: Option<(f64, usize, FcnModel<f32>)> = None;
    let mut initial_snapshot_loss = f64::NAN;

    for epoch in 1..=cfg.epochs {
        let start = Instant::now();
        order.sort_unstable();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(epoch_seed(cfg.seed, epoch)));
        let (mut loss_sum, mut cells) = (0.0, 0usize);
        let (mut correct, mut total) = (0u64, 0u64);
        for chunk in order.chunks(cfg.batch_size) {
            let batch: Vec<&Example> = chunk.iter().map(|&i| &train_set[i]).collect();
            let labels: Vec<u32> = batch.iter().map(|e| e.m).collect();
            let x = dropout.forward_train(&batch_tensor(&batch)?)?;
            dropout.clear_cache();
            let net = model.net_mut();
            let logits = net.forward_train(&x)?;
            let snapshots = logits.len();
            let (loss, grad) = bce_with_logits(&logits, &one_hot_targets(&labels, snapshots))?;
            if !loss.is_finite() {
                return Err(Error::Training(format!("non-finite loss in epoch {epoch}")));
            }
            if initial_snapshot_loss.is_nan() {
                initial_snapshot_loss = loss * NUM_CLASSES as f64;
            }
            net.zero_grad();
            net.backward(&grad, false)?;
            adam.step(&mut net.params_mut())?;
            loss_sum += loss * logits.numel() as f64;
            cells += logits.numel();
            for (b, &m) in labels.iter().enumerate() {
                for k in 0..snapshots {
                    let col: Vec<f32> = (0..NUM_CLASSES).map(|c| logits.get(b, c, k)).collect();
                    let pred = col
                        .iter()
                        .enumerate()
                        .fold(0, |best, (c, &v)| if v > col[best] { c } else { best });
                    correct += (pred as u32 + 1 == m) as u64;
                    total += 1;
                }
            }
        }
        let calib = &order[..cfg.bn_recalibration.min(order.len())];
        model.net_mut().recalibrate_batch_norm(calib.chunks(cfg.batch_size).map(|chunk| {
            let batch: Vec<&Example> = chunk.iter().map(|&i| &train_set[i]).collect();
            batch_tensor(&batch)
        }))?;
        let val = evaluate_examples(&model, val_set, cfg.batch_size)?;
        let m = EpochMetrics {
            epoch,
            train_loss: loss_sum / cells as f64,
            train_accuracy: correct as f64 / total as f64,
            val_loss: val.loss,
            val_accuracy: val.confusion.accuracy(),
            seconds: start.elapsed().as_secs_f64(),
        };
        log::info!(
            "epoch {epoch}/{}: train loss {:.4} acc {:.4}, val loss {:.4} acc {:.4} ({:.0} s)",
            cfg.epochs,
            m.train_loss,
            m.train_accuracy,
            m.val_loss,
            m.val_accuracy,
            m.seconds
        );
        if best.as_ref().is_none_or(|(acc, _, _)| m.val_accuracy > *acc) {
            best = Some((m.val_accuracy, epoch, model.clone()));
        }
        metrics.push(m);
    }
    let (_, best_epoch, model) = best.expect("at least one epoch ran");
    Ok(TrainOutcome {
        model,
        best_epoch,
        metrics,
        initial_snapshot_loss,
    })
}
