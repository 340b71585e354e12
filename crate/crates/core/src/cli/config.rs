//! TOML run configuration. Every table and key is optional; command-line
//! flags take precedence over file values.
//!
//! ```toml
//! [dataset]
//! train = 400          # signals per class
//! val = 100
//! test = 100
//! seed = 0
//! workers = 4
//!
//! [noise]
//! cutoff_hz = 1000.0
//! units = "normalized" # or "one_sided_hz"
//!
//! [model]
//! channels = [64, 64, 64]
//! batch_norm = { momentum = 0.1, eps = 1e-5 }
//!
//! [train]
//! batch_size = 32
//! epochs = 20
//! input_dropout = 0.2
//! seed = 0
//! adam = { lr = 2e-4, beta1 = 0.9, beta2 = 0.999, eps = 1e-8 }
//! bn_recalibration = 512 # signals; 0 keeps the running averages
//!
//! [eval]
//! shr_bin_db = 2.0
//! batch_size = 32
//! ```

use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::fcn::{BatchNormConfig, TrainConfig, DEFAULT_SHR_BIN_DB};
use crate::waveguide::{PsdUnits, SimConfig, DEFAULT_NOISE_CUTOFF};

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub dataset: DatasetSettings,
    pub noise: NoiseSettings,
    pub model: ModelSettings,
    pub train: TrainConfig,
    pub eval: EvalSettings,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetSettings {
    pub train: Option<usize>,
    pub val: Option<usize>,
    pub test: Option<usize>,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseSettings {
    pub cutoff_hz: f64,
    pub units: PsdUnits,
}

impl Default for NoiseSettings {
    fn default() -> Self {
        NoiseSettings {
            cutoff_hz: DEFAULT_NOISE_CUTOFF,
            units: PsdUnits::default(),
        }
    }
}

impl NoiseSettings {
    pub fn sim_config(&self) -> Result<SimConfig> {
        if !(self.cutoff_hz > 0.0 && self.cutoff_hz.is_finite()) {
            return Err(Error::InvalidParam {
                field: "noise.cutoff_hz",
                reason: format!("must be positive, got {}", self.cutoff_hz),
            });
        }
        Ok(SimConfig {
            noise_cutoff: self.cutoff_hz,
            noise_units: self.units,
            ..SimConfig::default()
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSettings {
    /// Widths of the first three hidden layers.
    pub channels: [usize; 3],
    pub batch_norm: BatchNormConfig,
}

impl Default for ModelSettings {
    fn default() -> Self {
        ModelSettings {
            channels: [64, 64, 64],
            batch_norm: BatchNormConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSettings {
    pub shr_bin_db: f64,
    pub batch_size: usize,
}

impl Default for EvalSettings {
    fn default() -> Self {
        EvalSettings {
            shr_bin_db: DEFAULT_SHR_BIN_DB,
            batch_size: 32,
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::InvalidParam {
            field: "config",
            reason: e.to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn documented_example_parses() {
        let doc = include_str!("config.rs");
        let toml: String = doc
            .lines()
            .filter_map(|l| l.strip_prefix("//! "))
            .skip_while(|l| !l.starts_with("```toml"))
            .skip(1)
            .take_while(|l| !l.starts_with("```"))
            .collect::<Vec<_>>()
            .join("\n");
        let cfg = RunConfig::from_toml(&toml).unwrap();
        assert_eq!(cfg.dataset.train, Some(400));
        assert_eq!(cfg.train, TrainConfig::default());
        assert_eq!(cfg.model, ModelSettings::default());
        assert_eq!(cfg.noise, NoiseSettings::default());
    }

    #[test]
    fn empty_and_partial_files() {
        assert_eq!(RunConfig::from_toml("").unwrap(), RunConfig::default());
        let cfg = RunConfig::from_toml("[train]\nepochs = 3\n[noise]\nunits = \"one_sided_hz\"").unwrap();
        assert_eq!(cfg.train.epochs, 3);
        assert_eq!(cfg.train.batch_size, 32);
        assert_eq!(cfg.noise.units, PsdUnits::OneSidedHz);
    }

    #[test]
    fn unknown_keys_are_usage_errors() {
        let e = RunConfig::from_toml("[train]\nepoch = 3").unwrap_err();
        assert!(matches!(e, Error::InvalidParam { field: "config", .. }));
    }
}
