use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Output hop of both classifiers, in input samples (2 ms at 8000 S/s).
pub const HOP: usize = 16;
/// Number of subharmonic-period classes, `M ∈ {1, 2, 3, 4}`.
pub const NUM_CLASSES: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FcnVariant {
    /// 401-sample window: 512 filters of 16 taps in the fourth layer.
    #[serde(rename = "FCN-401")]
    Fcn401,
    /// 785-sample window: 128 filters of 64 taps in the fourth layer.
    #[serde(rename = "FCN-785")]
    Fcn785,
}

impl FcnVariant {
    pub const ALL: [FcnVariant; 2] = [FcnVariant::Fcn401, FcnVariant::Fcn785];

    pub fn name(self) -> &'static str {
        match self {
            FcnVariant::Fcn401 => "FCN-401",
            FcnVariant::Fcn785 => "FCN-785",
        }
    }

    /// Receptive field the layer stack must produce.
    pub fn window(self) -> usize {
        match self {
            FcnVariant::Fcn401 => 401,
            FcnVariant::Fcn785 => 785,
        }
    }

    /// `(kernel, filters)` of the fourth layer.
    pub fn layer4(self) -> (usize, usize) {
        match self {
            FcnVariant::Fcn401 => (16, 512),
            FcnVariant::Fcn785 => (64, 128),
        }
    }
}

impl std::fmt::Display for FcnVariant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for FcnVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "fcn401" | "401" => Ok(FcnVariant::Fcn401),
            "fcn785" | "785" => Ok(FcnVariant::Fcn785),
            _ => Err(Error::Architecture(format!(
                "unknown variant `{s}` (expected FCN-401 or FCN-785)"
            ))),
        }
    }
}

/// Convolution `(kernel, out_channels)`, each followed by the stated post-ops.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConvSpec {
    pub kernel: usize,
    pub channels: usize,
    /// Batch-norm, ReLU and pair max-pooling after the convolution.
    pub hidden: bool,
}

/// Full layer description of a classifier.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FcnSpec {
    pub variant: FcnVariant,
    pub layers: Vec<ConvSpec>,
}

impl FcnSpec {
    /// Published layout with the default 64-channel hidden layers.
    pub fn new(variant: FcnVariant) -> Self {
        Self::with_channels(variant, [64, 64, 64])
    }

    /// Published kernels with custom widths for layers 1–3.
    pub fn with_channels(variant: FcnVariant, hidden: [usize; 3]) -> Self {
        let (x, y) = variant.layer4();
        let conv = |kernel, channels, hidden| ConvSpec {
            kernel,
            channels,
            hidden,
        };
        FcnSpec {
            variant,
            layers: vec![
                conv(80, hidden[0], true),
                conv(32, hidden[1], true),
                conv(32, hidden[2], true),
                conv(x, y, true),
                conv(1, NUM_CLASSES, false),
            ],
        }
    }

    /// Input span seen by one output sample.
    pub fn receptive_field(&self) -> usize {
        let (mut rf, mut jump) = (1, 1);
        for l in &self.layers {
            rf += (l.kernel - 1) * jump;
            if l.hidden {
                rf += jump;
                jump *= 2;
            }
        }
        rf
    }

    /// Input samples between consecutive outputs.
    pub fn hop(&self) -> usize {
        1 << self.layers.iter().filter(|l| l.hidden).count()
    }

    /// Number of outputs for an `n`-sample input, `None` if shorter than the window.
    pub fn snapshots(&self, n: usize) -> Option<usize> {
        let w = self.receptive_field();
        (n >= w).then(|| (n - w) / self.hop() + 1)
    }

    /// Centre of snapshot `k` in seconds at `rate`.
    pub fn snapshot_time(&self, k: usize, rate: f64) -> f64 {
        (k as f64 * self.hop() as f64 + self.receptive_field() as f64 / 2.0) / rate
    }

    /// Rejects layouts that break the window, hop or output-width contract.
    pub fn validate(&self) -> Result<()> {
        let rf = self.receptive_field();
        if rf != self.variant.window() {
            return Err(Error::Architecture(format!(
                "{} layer stack has a receptive field of {rf} samples, expected {}",
                self.variant,
                self.variant.window()
            )));
        }
        if self.hop() != HOP {
            return Err(Error::Architecture(format!(
                "{} layer stack has hop {}, expected {HOP}",
                self.variant,
                self.hop()
            )));
        }
        match self.layers.last() {
            Some(l) if l.channels == NUM_CLASSES && !l.hidden => {}
            _ => {
                return Err(Error::Architecture(format!(
                    "the last layer must be a plain convolution with {NUM_CLASSES} outputs"
                )))
            }
        }
        if self.layers.iter().any(|l| l.kernel == 0 || l.channels == 0) {
            return Err(Error::Architecture("kernels and widths must be positive".into()));
        }
        Ok(())
    }
}
