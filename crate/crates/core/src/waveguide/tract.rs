use super::PhysicalConstants;
use crate::error::{Error, Result};

/// Leaky uniform tube: a pair of delay lines carrying the forward and
/// backward incident pressure waves.
#[derive(Debug, Clone)]
pub struct UniformTract {
    /// Cross-sectional area (cm²).
    pub area: f64,
    delay: usize,
    gain: f64,
    forward: Vec<f64>,
    backward: Vec<f64>,
    pos: usize,
}

impl UniformTract {
    /// Tract of `length` cm, rounded to the nearest whole number of spatial
    /// quanta `c / f_sim` (at least one).
    pub fn new(length: f64, area: f64, alpha: f64, consts: &PhysicalConstants) -> Result<Self> {
        if !(length > 0.0 && length.is_finite()) {
            return Err(Error::InvalidParam {
                field: "tract length",
                reason: format!("{length} must be positive"),
            });
        }
        if !(area > 0.0 && area.is_finite()) {
            return Err(Error::InvalidParam {
                field: "tract area",
                reason: format!("{area} must be positive"),
            });
        }
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::InvalidParam {
                field: "alpha",
                reason: format!("{alpha} must lie in (0, 1]"),
            });
        }
        let delay = ((length / consts.spatial_quantum()).round() as usize).max(1);
        let quantized = delay as f64 * consts.spatial_quantum();
        Ok(UniformTract {
            area,
            delay,
            gain: alpha.powf(quantized),
            forward: vec![0.0; delay],
            backward: vec![0.0; delay],
            pos: 0,
        })
    }

    /// Delay in samples.
    pub fn delay(&self) -> usize {
        self.delay
    }

    /// End-to-end amplitude gain.
    pub fn gain(&self) -> f64 {
        self.gain
    }

    /// Waves leaving the tract this sample: (forward at the top, backward at the bottom).
    #[inline]
    pub fn outputs(&self) -> (f64, f64) {
        (
            self.gain * self.forward[self.pos],
            self.gain * self.backward[self.pos],
        )
    }

    /// Feeds this sample's incoming waves (forward at the bottom, backward at the top).
    #[inline]
    pub fn advance(&mut self, f_in: f64, b_in: f64) {
        self.forward[self.pos] = f_in;
        self.backward[self.pos] = b_in;
        self.pos += 1;
        if self.pos == self.delay {
            self.pos = 0;
        }
    }

    /// One propagation step: returns the outputs and pushes the inputs.
    pub fn step(&mut self, f_in: f64, b_in: f64) -> (f64, f64) {
        let out = self.outputs();
        self.advance(f_in, b_in);
        out
    }
}
