//! Synthesis parameter records and their Monte Carlo sampling.

use std::ops::Range;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinematics::{ModulationSpec, VocalFoldGeometry};

/// Admissible ranges (half-open) of the randomly drawn parameters.
pub mod ranges {
    use std::f64::consts::FRAC_PI_2;
    use std::ops::Range;

    pub const FO: Range<f64> = 100.0..300.0;
    pub const AM_EXTENT: Range<f64> = 0.1..1.0;
    pub const FM_EXTENT: Range<f64> = 0.005..0.1;
    pub const AM_PHASE: Range<f64> = -FRAC_PI_2..FRAC_PI_2;
    pub const FM_PHASE: Range<f64> = -FRAC_PI_2..FRAC_PI_2;
    pub const NOISE_PSD: Range<f64> = 100.0..2500.0;
    pub const NOISE_REDUCTION: Range<f64> = 0.2..0.6;
    pub const FOLD_LENGTH: Range<f64> = 0.738..1.562;
    pub const FOLD_THICKNESS: Range<f64> = 0.18..0.33;
    pub const MAX_DISPLACEMENT: Range<f64> = 0.09..0.132;
    pub const ABDUCTION: Range<f64> = 0.27..0.33;
    pub const SHAPE: Range<f64> = 1.8..2.2;
    /// Bulging quotient relative to the shape quotient.
    pub const BULGING_RATIO: Range<f64> = 0.45..0.55;
    pub const PHASE_QUOTIENT: Range<f64> = 0.18..0.22;
    pub const NODAL_RATIO: Range<f64> = 0.63..0.77;
    pub const TRACT_GAIN: Range<f64> = 0.9983..0.9985;
    pub const SUPRA_LENGTH: Range<f64> = 11.111..15.873;
    pub const SUPRA_AREA: Range<f64> = 1.0..5.0;
    pub const SUB_LENGTH: Range<f64> = 6.349..9.524;
    pub const SUB_AREA: Range<f64> = 1.0..3.0;
    pub const LUNG_PRESSURE: Range<f64> = 7056.0..8624.0;
}

/// Complete description of one synthetic voice signal.
///
/// Field names are part of the manifest and sidecar JSON format.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthParams {
    /// Subharmonic period `M`.
    #[serde(rename = "M")]
    pub m: u32,
    /// Speaking fundamental frequency (Hz).
    pub fo: f64,
    pub eps_am: f64,
    pub eps_fm: f64,
    /// AM phase (rad).
    pub phi_am: f64,
    /// FM phase (rad).
    pub phi_fm: f64,
    /// DC PSD of the full aspiration noise, in the unit chosen by
    /// [`SimConfig::noise_units`](crate::waveguide::SimConfig::noise_units).
    pub noise_psd: f64,
    /// Subcritical noise reduction factor.
    pub noise_delta: f64,
    /// Vibrating fold length (cm).
    pub fold_length: f64,
    /// Vibrating fold thickness (cm).
    pub fold_thickness: f64,
    /// Maximum displacement (cm).
    pub xi_m: f64,
    pub q_a: f64,
    pub q_s: f64,
    pub q_b: f64,
    pub q_p: f64,
    pub r_zn: f64,
    /// Propagation gain per cm, shared by both tracts.
    pub alpha: f64,
    /// Supraglottal tract length (cm) and area (cm²).
    pub supra_length: f64,
    pub supra_area: f64,
    /// Subglottal tract length (cm) and area (cm²).
    pub sub_length: f64,
    pub sub_area: f64,
    /// Lung pressure (dyn/cm²).
    pub lung_pressure: f64,
    /// Seed of the aspiration-noise generator.
    pub rng_seed: u64,
}

impl SynthParams {
    /// Mid-range values of every parameter, unmodulated.
    pub fn mid_range(m: u32) -> Self {
        let mid = |r: Range<f64>| 0.5 * (r.start + r.end);
        let q_s = mid(ranges::SHAPE);
        SynthParams {
            m,
            fo: mid(ranges::FO),
            eps_am: (ranges::AM_EXTENT.start * ranges::AM_EXTENT.end).sqrt(),
            eps_fm: (ranges::FM_EXTENT.start * ranges::FM_EXTENT.end).sqrt(),
            phi_am: 0.0,
            phi_fm: 0.0,
            noise_psd: mid(ranges::NOISE_PSD),
            noise_delta: mid(ranges::NOISE_REDUCTION),
            fold_length: mid(ranges::FOLD_LENGTH),
            fold_thickness: mid(ranges::FOLD_THICKNESS),
            xi_m: mid(ranges::MAX_DISPLACEMENT),
            q_a: mid(ranges::ABDUCTION),
            q_s,
            q_b: mid(ranges::BULGING_RATIO) * q_s,
            q_p: mid(ranges::PHASE_QUOTIENT),
            r_zn: mid(ranges::NODAL_RATIO),
            alpha: mid(ranges::TRACT_GAIN),
            supra_length: mid(ranges::SUPRA_LENGTH),
            supra_area: mid(ranges::SUPRA_AREA),
            sub_length: mid(ranges::SUB_LENGTH),
            sub_area: mid(ranges::SUB_AREA),
            lung_pressure: mid(ranges::LUNG_PRESSURE),
            rng_seed: 0,
        }
    }

    pub fn geometry(&self) -> VocalFoldGeometry {
        VocalFoldGeometry {
            length: self.fold_length,
            thickness: self.fold_thickness,
            max_displacement: self.xi_m,
            abduction: self.q_a,
            shape: self.q_s,
            bulging: self.q_b,
            phase_quotient: self.q_p,
            nodal_ratio: self.r_zn,
        }
    }

    pub fn modulation(&self) -> ModulationSpec {
        ModulationSpec {
            period: self.m,
            fo: self.fo,
            am_extent: self.eps_am,
            fm_extent: self.eps_fm,
            am_phase: self.phi_am,
            fm_phase: self.phi_fm,
        }
    }

    /// Checks every field against its admissible range.
    pub fn validate(&self) -> Result<()> {
        if !(1..=4).contains(&self.m) {
            return Err(Error::InvalidParam {
                field: "M",
                reason: format!("{} not in {{1, 2, 3, 4}}", self.m),
            });
        }
        let q_b_range = ranges::BULGING_RATIO.start * self.q_s..ranges::BULGING_RATIO.end * self.q_s;
        let checks: [(&'static str, f64, Range<f64>); 21] = [
            ("fo", self.fo, ranges::FO),
            ("eps_am", self.eps_am, ranges::AM_EXTENT),
            ("eps_fm", self.eps_fm, ranges::FM_EXTENT),
            ("phi_am", self.phi_am, ranges::AM_PHASE),
            ("phi_fm", self.phi_fm, ranges::FM_PHASE),
            ("noise_psd", self.noise_psd, ranges::NOISE_PSD),
            ("noise_delta", self.noise_delta, ranges::NOISE_REDUCTION),
            ("fold_length", self.fold_length, ranges::FOLD_LENGTH),
            ("fold_thickness", self.fold_thickness, ranges::FOLD_THICKNESS),
            ("xi_m", self.xi_m, ranges::MAX_DISPLACEMENT),
            ("q_a", self.q_a, ranges::ABDUCTION),
            ("q_s", self.q_s, ranges::SHAPE),
            ("q_b", self.q_b, q_b_range),
            ("q_p", self.q_p, ranges::PHASE_QUOTIENT),
            ("r_zn", self.r_zn, ranges::NODAL_RATIO),
            ("alpha", self.alpha, ranges::TRACT_GAIN),
            ("supra_length", self.supra_length, ranges::SUPRA_LENGTH),
            ("supra_area", self.supra_area, ranges::SUPRA_AREA),
            ("sub_length", self.sub_length, ranges::SUB_LENGTH),
            ("sub_area", self.sub_area, ranges::SUB_AREA),
            ("lung_pressure", self.lung_pressure, ranges::LUNG_PRESSURE),
        ];
        for (field, value, range) in checks {
            if !range.contains(&value) {
                return Err(Error::InvalidParam {
                    field,
                    reason: format!("{value} outside [{}, {})", range.start, range.end),
                });
            }
        }
        Ok(())
    }
}

fn uniform<R: Rng + ?Sized>(rng: &mut R, r: Range<f64>) -> f64 {
    rng.random_range(r)
}

fn log_uniform<R: Rng + ?Sized>(rng: &mut R, r: Range<f64>) -> f64 {
    let v = rng.random_range(r.start.ln()..r.end.ln()).exp();
    // exp(ln(hi)) can round up onto the open bound
    if v >= r.end {
        r.end.next_down()
    } else {
        v.max(r.start)
    }
}

/// Draws one parameter record for subharmonic period `m`.
///
/// Every parameter is independent and uniform over its range, except the
/// AM and FM extents, which are log-uniform, and the bulging quotient, drawn
/// relative to the shape quotient.
pub fn sample_params<R: Rng + ?Sized>(rng: &mut R, m: u32) -> Result<SynthParams> {
    if !(1..=4).contains(&m) {
        return Err(Error::InvalidParam {
            field: "M",
            reason: format!("{m} not in {{1, 2, 3, 4}}"),
        });
    }
    let fo = uniform(rng, ranges::FO);
    let eps_am = log_uniform(rng, ranges::AM_EXTENT);
    let eps_fm = log_uniform(rng, ranges::FM_EXTENT);
    let phi_am = uniform(rng, ranges::AM_PHASE);
    let phi_fm = uniform(rng, ranges::FM_PHASE);
    let noise_psd = uniform(rng, ranges::NOISE_PSD);
    let noise_delta = uniform(rng, ranges::NOISE_REDUCTION);
    let fold_length = uniform(rng, ranges::FOLD_LENGTH);
    let fold_thickness = uniform(rng, ranges::FOLD_THICKNESS);
    let xi_m = uniform(rng, ranges::MAX_DISPLACEMENT);
    let q_a = uniform(rng, ranges::ABDUCTION);
    let q_s = uniform(rng, ranges::SHAPE);
    let q_b = uniform(rng, ranges::BULGING_RATIO) * q_s;
    let q_p = uniform(rng, ranges::PHASE_QUOTIENT);
    let r_zn = uniform(rng, ranges::NODAL_RATIO);
    let alpha = uniform(rng, ranges::TRACT_GAIN);
    let supra_length = uniform(rng, ranges::SUPRA_LENGTH);
    let supra_area = uniform(rng, ranges::SUPRA_AREA);
    let sub_length = uniform(rng, ranges::SUB_LENGTH);
    let sub_area = uniform(rng, ranges::SUB_AREA);
    let lung_pressure = uniform(rng, ranges::LUNG_PRESSURE);
    let rng_seed = rng.random();
    Ok(SynthParams {
        m,
        fo,
        eps_am,
        eps_fm,
        phi_am,
        phi_fm,
        noise_psd,
        noise_delta,
        fold_length,
        fold_thickness,
        xi_m,
        q_a,
        q_s,
        q_b,
        q_p,
        r_zn,
        alpha,
        supra_length,
        supra_area,
        sub_length,
        sub_area,
        lung_pressure,
        rng_seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn same_seed_same_params() {
        let a = sample_params(&mut ChaCha8Rng::seed_from_u64(5), 3).unwrap();
        let b = sample_params(&mut ChaCha8Rng::seed_from_u64(5), 3).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.m, 3);
    }

    #[test]
    fn draws_validate() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for m in 1..=4 {
            for _ in 0..1000 {
                sample_params(&mut rng, m).unwrap().validate().unwrap();
            }
        }
    }

    #[test]
    fn rejects_bad_period() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(sample_params(&mut rng, 0).is_err());
        assert!(sample_params(&mut rng, 5).is_err());
        let mut p = SynthParams::mid_range(1);
        p.m = 5;
        assert!(matches!(p.validate(), Err(Error::InvalidParam { field: "M", .. })));
    }

    #[test]
    fn validate_names_offending_field() {
        let mut p = SynthParams::mid_range(2);
        p.validate().unwrap();
        p.fo = 320.0;
        assert!(matches!(p.validate(), Err(Error::InvalidParam { field: "fo", .. })));
        let mut p = SynthParams::mid_range(2);
        p.q_b = 0.6 * p.q_s;
        assert!(matches!(p.validate(), Err(Error::InvalidParam { field: "q_b", .. })));
    }

    #[test]
    fn json_field_names_are_stable() {
        let v = serde_json::to_value(SynthParams::mid_range(2)).unwrap();
        for key in ["M", "fo", "eps_am", "q_b", "supra_length", "lung_pressure", "rng_seed"] {
            assert!(v.get(key).is_some(), "{key}");
        }
    }
}
