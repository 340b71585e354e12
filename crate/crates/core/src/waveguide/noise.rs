//! Aspiration noise with Reynolds-number level switching.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::PhysicalConstants;

/// Default corner frequency of the noise lowpass (Hz).
pub const DEFAULT_NOISE_CUTOFF: f64 = 1000.0;
/// Critical Reynolds number above which full aspiration noise is produced.
pub const CRITICAL_REYNOLDS: f64 = 1200.0;

/// Frequency unit in which the noise DC level `S0` is expressed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PsdUnits {
    /// Density per unit normalized frequency (cycles/sample): the white
    /// Gaussian drive has variance `S0` and the lowpass has unit DC gain.
    #[default]
    Normalized,
    /// One-sided density per hertz at the simulation rate.
    OneSidedHz,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseConfig {
    /// DC power spectral density of the full noise, in `units`.
    pub s0: f64,
    pub units: PsdUnits,
    /// Amplitude factor applied below the critical Reynolds number.
    pub delta: f64,
    /// Lowpass corner frequency (Hz).
    pub cutoff: f64,
    pub critical_reynolds: f64,
    pub seed: u64,
}

impl NoiseConfig {
    pub fn new(s0: f64, delta: f64, seed: u64) -> Self {
        NoiseConfig {
            s0,
            units: PsdUnits::default(),
            delta,
            cutoff: DEFAULT_NOISE_CUTOFF,
            critical_reynolds: CRITICAL_REYNOLDS,
            seed,
        }
    }
}

/// Reynolds number of flow `u` (cm³/s) through a glottis of length `fold_length` (cm).
#[inline]
pub fn reynolds(u: f64, fold_length: f64, consts: &PhysicalConstants) -> f64 {
    u * consts.rho / (fold_length * consts.mu)
}

/// First-order lowpass Gaussian noise source `ν(t)` and its gated output `u_ν(t)`.
#[derive(Debug, Clone)]
pub struct TurbulenceSource {
    cfg: NoiseConfig,
    pole: f64,
    gain: f64,
    state: f64,
    rng: ChaCha8Rng,
}

impl TurbulenceSource {
    pub fn new(cfg: NoiseConfig, consts: &PhysicalConstants) -> Self {
        let fs = consts.sample_rate;
        let pole = (-2.0 * PI * cfg.cutoff / fs).exp();
        // g·w/(1 − p z⁻¹) with unit-variance w has DC density g²/(1 − p)² per
        // cycle/sample, or 2g²/((1 − p)² fs) one-sided per hertz.
        let s0 = cfg.s0.max(0.0);
        let gain = (1.0 - pole)
            * match cfg.units {
                PsdUnits::Normalized => s0.sqrt(),
                PsdUnits::OneSidedHz => (s0 * fs / 2.0).sqrt(),
            };
        TurbulenceSource {
            cfg,
            pole,
            gain,
            state: 0.0,
            rng: ChaCha8Rng::seed_from_u64(cfg.seed),
        }
    }

    /// Next sample of the ungated source `ν`.
    #[inline]
    pub fn next_raw(&mut self) -> f64 {
        let w: f64 = StandardNormal.sample(&mut self.rng);
        self.state = self.pole * self.state + self.gain * w;
        self.state
    }

    /// Next noise flow sample given the current glottal flow `u`.
    #[inline]
    pub fn sample(&mut self, u: f64, fold_length: f64, consts: &PhysicalConstants) -> f64 {
        let nu = self.next_raw();
        if reynolds(u, fold_length, consts) > self.cfg.critical_reynolds {
            nu
        } else {
            self.cfg.delta * nu
        }
    }
}
