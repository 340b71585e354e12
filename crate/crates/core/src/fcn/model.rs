use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{FcnSpec, FcnVariant, SnapshotReport, NUM_CLASSES};
use crate::error::{Error, Result};
use crate::nn::{
    sigmoid, BatchNorm1d, Checkpoint, Conv1d, Layer, MaxPool2, Module, Param, Relu, Scalar,
    Sequential, Tensor, DEFAULT_BN_EPS, DEFAULT_BN_MOMENTUM,
};
use crate::signal::{Signal, FCN_RATE};

const FORMAT: &str = "subharmonic-fcn/1";

/// Shrinks the output layer's initial weights. Hidden features are
/// non-negative with mean near 1 after ReLU and pooling, so a full-scale
/// draw would give every class logit a sizeable constant offset.
const OUTPUT_INIT_SCALE: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BatchNormConfig {
    pub momentum: f64,
    pub eps: f64,
}

impl Default for BatchNormConfig {
    fn default() -> Self {
        BatchNormConfig {
            momentum: DEFAULT_BN_MOMENTUM,
            eps: DEFAULT_BN_EPS,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Architecture {
    format: String,
    spec: FcnSpec,
    batch_norm: BatchNormConfig,
}

/// Fully convolutional period classifier.
///
/// The network ends in logits; [`FcnModel::probabilities`] applies the
/// sigmoid. Inference needs only `&self`, so one model can serve many threads.
#[derive(Debug, Clone)]
pub struct FcnModel<T = f32> {
    spec: FcnSpec,
    batch_norm: BatchNormConfig,
    net: Sequential<T>,
}

/// Published classifier with default widths and freshly initialized weights.
pub fn build_fcn(variant: FcnVariant, seed: u64) -> Result<FcnModel<f32>> {
    FcnModel::build(FcnSpec::new(variant), BatchNormConfig::default(), seed)
}

impl<T: Scalar> FcnModel<T> {
    pub fn build(spec: FcnSpec, batch_norm: BatchNormConfig, seed: u64) -> Result<Self> {
        spec.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut layers = Vec::new();
        let mut in_ch = 1;
        for l in &spec.layers {
            let mut conv = Conv1d::new(in_ch, l.channels, l.kernel, &mut rng);
            if !l.hidden {
                let mut params = conv.params_mut();
                params[0].value.iter_mut().for_each(|w| *w *= T::from_f64(OUTPUT_INIT_SCALE));
                params[1].value.fill(T::ZERO);
            }
            layers.push(Layer::Conv1d(conv));
            if l.hidden {
                layers.push(Layer::BatchNorm(BatchNorm1d::with_hyper(
                    l.channels,
                    batch_norm.momentum,
                    batch_norm.eps,
                )));
                layers.push(Layer::Relu(Relu::default()));
                layers.push(Layer::MaxPool2(MaxPool2::default()));
            }
            in_ch = l.channels;
        }
        let model = FcnModel {
            spec,
            batch_norm,
            net: Sequential::new(layers),
        };
        model.check_arithmetic()?;
        Ok(model)
    }

    /// Confirms the built stack realizes the snapshot-count law.
    fn check_arithmetic(&self) -> Result<()> {
        let w = self.spec.receptive_field();
        for n in [w, w + 1, w + 15, w + 16, w + 17, 8000] {
            let expect = self.spec.snapshots(n);
            if self.net.output_len(n) != expect {
                return Err(Error::Architecture(format!(
                    "{}: {n}-sample input gives {:?} outputs, expected {expect:?}",
                    self.spec.variant,
                    self.net.output_len(n)
                )));
            }
        }
        if self.net.output_len(w - 1).is_some() {
            return Err(Error::Architecture(format!(
                "{}: input shorter than the window still produces output",
                self.spec.variant
            )));
        }
        Ok(())
    }

    pub fn spec(&self) -> &FcnSpec {
        &self.spec
    }

    pub fn variant(&self) -> FcnVariant {
        self.spec.variant
    }

    pub fn batch_norm(&self) -> BatchNormConfig {
        self.batch_norm
    }

    pub fn window(&self) -> usize {
        self.spec.receptive_field()
    }

    pub fn net(&self) -> &Sequential<T> {
        &self.net
    }

    pub fn net_mut(&mut self) -> &mut Sequential<T> {
        &mut self.net
    }

    /// Inference-mode logits, `(batch, 4, snapshots)`.
    pub fn logits(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        if x.channels() != 1 {
            return Err(Error::Shape(format!("expected mono input, got {} channels", x.channels())));
        }
        if x.len() < self.window() {
            return Err(Error::Shape(format!(
                "input of {} samples is shorter than the {}-sample window",
                x.len(),
                self.window()
            )));
        }
        self.net.infer(x)
    }

    pub fn probabilities(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        Ok(self.logits(x)?.map(sigmoid))
    }

    /// Per-snapshot period probabilities of a normalized 8000 S/s signal.
    pub fn infer(&self, sig: &Signal) -> Result<SnapshotReport> {
        if sig.rate != FCN_RATE {
            return Err(Error::InvalidParam {
                field: "rate",
                reason: format!("classifier input must be {FCN_RATE} S/s, got {}", sig.rate),
            });
        }
        let data: Vec<T> = sig.samples.iter().map(|&v| T::from_f64(v)).collect();
        let p = self.probabilities(&Tensor::new([1, 1, data.len()], data)?)?;
        Ok(self.report(&p, 0))
    }

    /// Snapshot report of batch item `b` of a probability tensor.
    pub fn report(&self, probs: &Tensor<T>, b: usize) -> SnapshotReport {
        let n = probs.len();
        let rate = FCN_RATE as f64;
        SnapshotReport {
            variant: self.spec.variant,
            times: (0..n).map(|k| self.spec.snapshot_time(k, rate)).collect(),
            probs: (0..n)
                .map(|k| {
                    let mut p = [0.0; NUM_CLASSES];
                    for (c, v) in p.iter_mut().enumerate() {
                        *v = probs.get(b, c, k).to_f64();
                    }
                    p
                })
                .collect(),
        }
    }

    pub fn params(&self) -> Vec<&Param<T>> {
        self.net.params()
    }

    fn architecture(&self) -> Value {
        serde_json::to_value(Architecture {
            format: FORMAT.into(),
            spec: self.spec.clone(),
            batch_norm: self.batch_norm,
        })
        .expect("architecture serializes")
    }
}

impl FcnModel<f32> {
    pub fn to_checkpoint(&self, metadata: Value) -> Checkpoint {
        Checkpoint::from_params(self.architecture(), metadata, &self.net.params())
    }

    pub fn from_checkpoint(ck: &Checkpoint) -> Result<Self> {
        let arch: Architecture = serde_json::from_value(ck.architecture.clone())
            .map_err(|e| Error::Checkpoint(format!("architecture header: {e}")))?;
        if arch.format != FORMAT {
            return Err(Error::Checkpoint(format!("unsupported format `{}`", arch.format)));
        }
        let mut model = FcnModel::build(arch.spec, arch.batch_norm, 0)?;
        ck.load_into(&mut model.net.params_mut())?;
        for l in &model.net.layers {
            if let Layer::BatchNorm(bn) = l {
                bn.validate()?;
            }
        }
        Ok(model)
    }

    pub fn save(&self, path: impl AsRef<Path>, metadata: Value) -> Result<()> {
        self.to_checkpoint(metadata).write(path)
    }

    /// Loads a model and the metadata stored with it.
    pub fn load(path: impl AsRef<Path>) -> Result<(Self, Value)> {
        let ck = Checkpoint::read(path)?;
        Ok((Self::from_checkpoint(&ck)?, ck.metadata))
    }

    /// Same weights in double precision.
    pub fn to_f64(&self) -> FcnModel<f64> {
        let mut m = FcnModel::<f64>::build(self.spec.clone(), self.batch_norm, 0).expect("validated spec");
        for (dst, src) in m.net.params_mut().into_iter().zip(self.net.params()) {
            for (d, s) in dst.value.iter_mut().zip(&src.value) {
                *d = *s as f64;
            }
        }
        m
    }

    /// Header summary used by the command-line tools.
    pub fn describe(&self) -> Value {
        json!({
            "variant": self.spec.variant.name(),
            "window": self.window(),
            "hop": self.spec.hop(),
            "trainable": self.net.trainable_count(),
        })
    }
}
