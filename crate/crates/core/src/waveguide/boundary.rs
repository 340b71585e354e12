//! Lung and lip boundary conditions.

use std::f64::consts::PI;

use super::PhysicalConstants;

/// Constant-pressure lung with an approximately matched reflection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LungBoundary {
    /// Lung pressure (dyn/cm²).
    pub pressure: f64,
}

impl LungBoundary {
    /// Forward wave entering the subglottal tract given the backward wave `b_l`.
    #[inline]
    pub fn reflect(&self, b_l: f64) -> f64 {
        0.9 * self.pressure - 0.8 * b_l
    }
}

/// Radiation load of a circular piston in an infinite baffle, discretized
/// with the bilinear transform.
///
/// With `Z(s) = s L R / (R + s L)`:
/// `P_o = 2Z/(Z+1) · F_r` and `B_r = (Z−1)/(Z+1) · F_r`.
/// Both outputs share the denominator `s L (R+1) + R`, so one state suffices.
#[derive(Debug, Clone)]
pub struct LipRadiation {
    /// Radiation inertance `L_r` (s).
    pub inertance: f64,
    /// Radiation resistance `R_r` (normalized).
    pub resistance: f64,
    den0: f64,
    den1: f64,
    out_num: [f64; 2],
    refl_num: [f64; 2],
    state: f64,
}

impl LipRadiation {
    pub fn new(mouth_area: f64, consts: &PhysicalConstants) -> Self {
        let l = 8.0 / (3.0 * PI * consts.c) * (mouth_area / PI).sqrt();
        let r = 128.0 / (9.0 * PI * PI);
        let k = 2.0 * consts.sample_rate;
        // Analog: num(s) = n1 s + n0, den(s) = d1 s + d0.
        let (d1, d0) = (l * (r + 1.0), r);
        let (p1, p0) = (2.0 * l * r, 0.0);
        let (b1, b0) = (l * (r - 1.0), -r);
        // s -> k (1 - z^-1) / (1 + z^-1)
        LipRadiation {
            inertance: l,
            resistance: r,
            den0: d1 * k + d0,
            den1: d0 - d1 * k,
            out_num: [p1 * k + p0, p0 - p1 * k],
            refl_num: [b1 * k + b0, b0 - b1 * k],
            state: 0.0,
        }
    }

    /// Pole of the discrete filter.
    pub fn pole(&self) -> f64 {
        -self.den1 / self.den0
    }

    /// Normalized lip impedance `Z_r(s)` at complex frequency `s = (re, im)`.
    pub fn impedance(&self, s: (f64, f64)) -> (f64, f64) {
        let (l, r) = (self.inertance, self.resistance);
        // s L R / (R + s L)
        let num = (s.0 * l * r, s.1 * l * r);
        let den = (r + s.0 * l, s.1 * l);
        cdiv(num, den)
    }

    pub fn reset(&mut self) {
        self.state = 0.0;
    }

    /// Consumes the forward wave `f_r` and returns (radiated pressure, reflected wave).
    #[inline]
    pub fn radiate(&mut self, f_r: f64) -> (f64, f64) {
        let w = (f_r - self.den1 * self.state) / self.den0;
        let p_o = self.out_num[0] * w + self.out_num[1] * self.state;
        let b_r = self.refl_num[0] * w + self.refl_num[1] * self.state;
        self.state = w;
        (p_o, b_r)
    }
}

fn cdiv(a: (f64, f64), b: (f64, f64)) -> (f64, f64) {
    let d = b.0 * b.0 + b.1 * b.1;
    ((a.0 * b.0 + a.1 * b.1) / d, (a.1 * b.0 - a.0 * b.1) / d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lung_examples() {
        let lung = LungBoundary { pressure: 8000.0 };
        assert_eq!(lung.reflect(0.0), 7200.0);
        assert_eq!(lung.reflect(1000.0), 6400.0);
        assert!(lung.reflect(1.125 * 8000.0).abs() < 1e-9);
    }

    #[test]
    fn lip_filter_is_stable() {
        let c = PhysicalConstants::default();
        for area in [1.0, 2.5, 5.0] {
            assert!(LipRadiation::new(area, &c).pole().abs() < 1.0);
        }
    }

    #[test]
    fn dc_is_fully_reflected_with_inversion() {
        let c = PhysicalConstants::default();
        let mut lip = LipRadiation::new(3.0, &c);
        let mut last = (0.0, 0.0);
        for _ in 0..2000 {
            last = lip.radiate(5.0);
        }
        assert!(last.0.abs() < 1e-9, "{}", last.0);
        assert!((last.1 + 5.0).abs() < 1e-9, "{}", last.1);
    }

    #[test]
    fn zero_in_zero_out() {
        let c = PhysicalConstants::default();
        let mut lip = LipRadiation::new(3.0, &c);
        for _ in 0..100 {
            assert_eq!(lip.radiate(0.0), (0.0, 0.0));
        }
    }

    #[test]
    fn filter_is_linear() {
        let c = PhysicalConstants::default();
        let mut a = LipRadiation::new(2.0, &c);
        let mut b = LipRadiation::new(2.0, &c);
        for n in 0..300 {
            let x = ((n * 13) % 7) as f64 - 3.0;
            let (p1, r1) = a.radiate(x);
            let (p2, r2) = b.radiate(2.0 * x);
            assert!((p2 - 2.0 * p1).abs() <= 1e-12 * (1.0 + p1.abs()));
            assert!((r2 - 2.0 * r1).abs() <= 1e-12 * (1.0 + r1.abs()));
        }
    }
}
