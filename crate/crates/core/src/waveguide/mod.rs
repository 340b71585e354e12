//! Transmission-line voice synthesizer.
//!
//! Five blocks exchange incident pressure waves once per sample:
//!
//! ```text
//!   lung ──f_L──▶ subglottal ──f_s──▶ glottis ──f_e──▶ supraglottal ──f_r──▶ lips ──▶ p_o
//!        ◀──b_L──   tract    ◀──b_s──         ◀──b_e──     tract     ◀──b_r──
//! ```
//!
//! The glottis is driven by the kinematic glottal area; the flow it admits
//! (plus aspiration noise) scatters the waves arriving from either tract.

mod boundary;
mod glottis;
mod noise;
mod tract;

pub use boundary::{LipRadiation, LungBoundary};
pub use glottis::{effective_area, glottal_flow, glottis_scatter, pressure_balance, pressure_recovery};
pub use noise::{reynolds, NoiseConfig, PsdUnits, TurbulenceSource, CRITICAL_REYNOLDS, DEFAULT_NOISE_CUTOFF};
pub use tract::UniformTract;

use crate::dataset::SynthParams;
use crate::error::{Error, Result};
use crate::kinematics::{FoldGrid, GlottalAreaModel, DEFAULT_NY, DEFAULT_NZ};
use crate::signal::{Signal, SIM_RATE};

/// Air and sampling constants (CGS units).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants {
    /// Speed of sound (cm/s).
    pub c: f64,
    /// Air density (g/cm³).
    pub rho: f64,
    /// Air viscosity (g/(cm·s)).
    pub mu: f64,
    /// Simulation rate (S/s).
    pub sample_rate: f64,
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        PhysicalConstants {
            c: 35_000.0,
            rho: 0.00114,
            mu: 1.86e-4,
            sample_rate: SIM_RATE as f64,
        }
    }
}

impl PhysicalConstants {
    /// Distance sound travels in one sample (cm).
    pub fn spatial_quantum(&self) -> f64 {
        self.c / self.sample_rate
    }
}

/// Knobs of the synthesizer that are not part of a parameter record.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub constants: PhysicalConstants,
    /// Corner frequency of the aspiration-noise lowpass (Hz).
    pub noise_cutoff: f64,
    /// Unit of the parameter record's noise level.
    pub noise_units: PsdUnits,
    pub grid_ny: usize,
    pub grid_nz: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            constants: PhysicalConstants::default(),
            noise_cutoff: DEFAULT_NOISE_CUTOFF,
            noise_units: PsdUnits::default(),
            grid_ny: DEFAULT_NY,
            grid_nz: DEFAULT_NZ,
        }
    }
}

/// Everything observable at the glottis and lips for one sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimSample {
    pub area: f64,
    /// Glottal flow without noise (cm³/s).
    pub flow: f64,
    /// Aspiration noise flow (cm³/s).
    pub noise: f64,
    /// Radiated pressure.
    pub pressure: f64,
}

/// Acoustic part of the synthesizer: tracts, glottal junction, boundaries.
///
/// The glottal area is supplied per sample so that the loop can be driven
/// by the kinematic model or by any other area waveform.
#[derive(Debug, Clone)]
pub struct VoiceSimulator {
    consts: PhysicalConstants,
    sub: UniformTract,
    supra: UniformTract,
    lung: LungBoundary,
    lip: LipRadiation,
    noise: TurbulenceSource,
    fold_length: f64,
}

impl VoiceSimulator {
    pub fn new(params: &SynthParams, cfg: &SimConfig) -> Result<Self> {
        let consts = cfg.constants;
        let mut noise_cfg = NoiseConfig::new(params.noise_psd, params.noise_delta, params.rng_seed);
        noise_cfg.cutoff = cfg.noise_cutoff;
        noise_cfg.units = cfg.noise_units;
        Ok(VoiceSimulator {
            consts,
            sub: UniformTract::new(params.sub_length, params.sub_area, params.alpha, &consts)?,
            supra: UniformTract::new(params.supra_length, params.supra_area, params.alpha, &consts)?,
            lung: LungBoundary {
                pressure: params.lung_pressure,
            },
            lip: LipRadiation::new(params.supra_area, &consts),
            noise: TurbulenceSource::new(noise_cfg, &consts),
            fold_length: params.fold_length,
        })
    }

    /// Advances the whole system by one sample with glottal area `area` (cm²).
    pub fn step(&mut self, area: f64) -> Result<SimSample> {
        let (a_e, a_s) = (self.supra.area, self.sub.area);
        let (f_s, b_l) = self.sub.outputs();
        let (f_r, b_e) = self.supra.outputs();
        let flow = glottal_flow(area, f_s, b_e, &self.consts, a_e, a_s)?;
        let noise = self.noise.sample(flow, self.fold_length, &self.consts);
        let (f_e, b_s) = glottis_scatter(flow + noise, f_s, b_e, &self.consts, a_e, a_s);
        let f_l = self.lung.reflect(b_l);
        let (pressure, b_r) = self.lip.radiate(f_r);
        self.sub.advance(f_l, b_s);
        self.supra.advance(f_e, b_r);
        Ok(SimSample {
            area,
            flow,
            noise,
            pressure,
        })
    }
}

/// Synthesizes `duration` seconds of radiated pressure at the simulation rate.
pub fn simulate(params: &SynthParams, duration: f64) -> Result<Signal> {
    simulate_with(params, duration, &SimConfig::default())
}

pub fn simulate_with(params: &SynthParams, duration: f64, cfg: &SimConfig) -> Result<Signal> {
    let mut samples = Vec::new();
    run(params, duration, cfg, |s| samples.push(s.pressure))?;
    Ok(Signal::new(samples, cfg.constants.sample_rate as u32).with_meta(format!(
        "synthetic M={} fo={:.3} seed={}",
        params.m, params.fo, params.rng_seed
    )))
}

/// Runs the full loop and hands every [`SimSample`] to `sink`.
pub fn run(
    params: &SynthParams,
    duration: f64,
    cfg: &SimConfig,
    mut sink: impl FnMut(&SimSample),
) -> Result<()> {
    let geom = params.geometry();
    geom.validate()?;
    let modulation = params.modulation();
    modulation.validate()?;
    let grid = FoldGrid::new(&geom, cfg.grid_ny, cfg.grid_nz)?;
    let mut area_model = GlottalAreaModel::new(&geom, &modulation, &grid);
    let mut sim = VoiceSimulator::new(params, cfg)?;
    let fs = cfg.constants.sample_rate;
    let n = (duration * fs).round() as usize;
    for i in 0..n {
        let area = area_model.area(i as f64 / fs);
        let s = sim.step(area).map_err(|e| match e {
            Error::Simulation { reason, .. } => Error::Simulation { sample: i, reason },
            other => other,
        })?;
        if !(s.pressure.is_finite() && s.flow.is_finite() && s.noise.is_finite()) {
            return Err(Error::Simulation {
                sample: i,
                reason: "non-finite state".into(),
            });
        }
        sink(&s);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spatial_quantum_matches_expected_value() {
        assert!((PhysicalConstants::default().spatial_quantum() - 0.7937).abs() < 1e-4);
    }

    #[test]
    fn no_lung_pressure_no_sound() {
        let mut p = SynthParams::mid_range(1);
        p.lung_pressure = 0.0;
        p.noise_psd = 0.0;
        let s = simulate(&p, 0.05).unwrap();
        assert!(s.samples.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn deterministic_output() {
        let p = SynthParams {
            rng_seed: 77,
            ..SynthParams::mid_range(3)
        };
        let a = simulate(&p, 0.1).unwrap();
        let b = simulate(&p, 0.1).unwrap();
        assert_eq!(a.samples, b.samples);
        assert_eq!(a.len(), 4410);
    }

    #[test]
    fn invalid_geometry_is_rejected() {
        let mut p = SynthParams::mid_range(1);
        p.fold_length = -1.0;
        assert!(simulate(&p, 0.01).is_err());
    }
}
