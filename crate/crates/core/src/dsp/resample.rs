//! Rational-ratio polyphase resampling with a Kaiser-windowed sinc prototype.

use std::f64::consts::PI;

use crate::signal::Signal;

/// Stopband attenuation of the prototype lowpass (dB).
const STOPBAND_DB: f64 = 80.0;
/// Cutoff relative to the lower of the two Nyquist frequencies.
const CUTOFF: f64 = 0.9;
/// Half transition width relative to the lower Nyquist frequency.
const HALF_TRANSITION: f64 = 0.1;

/// Polyphase filter bank for a fixed `up / down` ratio.
#[derive(Debug, Clone)]
pub struct Resampler {
    up: usize,
    down: usize,
    /// Group delay of the prototype, in upsampled samples.
    delay: usize,
    /// `banks[phase][j]` is prototype tap `phase + j * up`.
    banks: Vec<Vec<f64>>,
}

impl Resampler {
    /// Builds a resampler for the ratio `up / down`, reduced to lowest terms.
    pub fn new(up: usize, down: usize) -> Self {
        assert!(up >= 1 && down >= 1, "resampling factors must be positive");
        let g = gcd(up, down);
        let (up, down) = (up / g, down / g);
        if up == 1 && down == 1 {
            return Resampler {
                up,
                down,
                delay: 0,
                banks: vec![vec![1.0]],
            };
        }
        let taps = prototype(up, down);
        let delay = (taps.len() - 1) / 2;
        let mut banks = vec![Vec::new(); up];
        for (k, &h) in taps.iter().enumerate() {
            banks[k % up].push(h);
        }
        // Unit DC gain per phase keeps constant inputs exactly constant.
        for bank in &mut banks {
            let s: f64 = bank.iter().sum();
            if s != 0.0 {
                bank.iter_mut().for_each(|h| *h /= s);
            }
        }
        Resampler {
            up,
            down,
            delay,
            banks,
        }
    }

    pub fn ratio(&self) -> (usize, usize) {
        (self.up, self.down)
    }

    /// Number of prototype taps.
    pub fn taps(&self) -> usize {
        self.banks.iter().map(Vec::len).sum()
    }

    /// Resamples a sequence; output length is `ceil(len * up / down)`.
    pub fn process(&self, x: &[f64]) -> Vec<f64> {
        if (self.up == 1 && self.down == 1) || x.is_empty() {
            return x.to_vec();
        }
        let n_out = (x.len() * self.up).div_ceil(self.down);
        let mut y = Vec::with_capacity(n_out);
        for m in 0..n_out {
            let n0 = m * self.down + self.delay;
            let phase = n0 % self.up;
            let top = (n0 / self.up) as isize;
            let bank = &self.banks[phase];
            let last = x.len() as isize - 1;
            let mut acc = 0.0;
            for (j, &h) in bank.iter().enumerate() {
                // Edge samples are held beyond both ends.
                let i = (top - j as isize).clamp(0, last) as usize;
                acc += h * x[i];
            }
            y.push(acc);
        }
        y
    }
}

/// Resamples `sig` by the rational factor `up / down`.
pub fn resample(sig: &Signal, up: usize, down: usize) -> Signal {
    let r = Resampler::new(up, down);
    let (p, q) = r.ratio();
    let rate = (sig.rate as u64 * p as u64 / q as u64) as u32;
    Signal {
        samples: r.process(&sig.samples),
        rate,
        meta: sig.meta.clone(),
    }
}

/// Resamples `sig` to `rate` (S/s).
pub fn resample_to(sig: &Signal, rate: u32) -> Signal {
    resample(sig, rate as usize, sig.rate as usize)
}

fn gcd(mut a: usize, mut b: usize) -> usize {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Kaiser-windowed sinc lowpass at the upsampled rate, odd length.
fn prototype(up: usize, down: usize) -> Vec<f64> {
    // Frequencies normalized to the upsampled rate (cycles/sample).
    let nyq = 0.5 / up.max(down) as f64;
    let fc = CUTOFF * nyq;
    let dw = 2.0 * PI * (2.0 * HALF_TRANSITION * nyq);
    let order = ((STOPBAND_DB - 7.95) / (2.285 * dw)).ceil() as usize;
    let len = order + 1 + (order % 2);
    let beta = 0.1102 * (STOPBAND_DB - 8.7);
    let center = (len - 1) as f64 / 2.0;
    let norm = bessel_i0(beta);
    (0..len)
        .map(|n| {
            let t = n as f64 - center;
            let sinc = if t == 0.0 {
                2.0 * fc
            } else {
                (2.0 * PI * fc * t).sin() / (PI * t)
            };
            let r = t / center;
            let w = bessel_i0(beta * (1.0 - r * r).max(0.0).sqrt()) / norm;
            sinc * w
        })
        .collect()
}

/// Modified Bessel function of the first kind, order zero (power series).
fn bessel_i0(x: f64) -> f64 {
    let q = 0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..200 {
        term *= q / (k as f64 * k as f64);
        sum += term;
        if term < sum * 1e-17 {
            break;
        }
    }
    sum
}
