//! Periodograms, Welch averages and spectrograms.
//!
//! All densities are one-sided: `Σ psd[k] · Δf` equals the (window-weighted)
//! mean power of the analyzed samples.

use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::signal::Signal;

/// Minimum number of samples accepted by [`periodogram`].
pub const MIN_PERIODOGRAM_LEN: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Window {
    Hamming,
    Rect,
}

impl Window {
    /// Symmetric window of length `n`.
    pub fn coefficients(self, n: usize) -> Vec<f64> {
        match self {
            Window::Rect => vec![1.0; n],
            Window::Hamming if n == 1 => vec![1.0],
            Window::Hamming => (0..n)
                .map(|i| 0.54 - 0.46 * (2.0 * PI * i as f64 / (n - 1) as f64).cos())
                .collect(),
        }
    }
}

/// One-sided power spectral density on the grid `k · rate / n`, `k = 0..=n/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub freqs: Vec<f64>,
    pub psd: Vec<f64>,
    pub window: Window,
    /// Bin spacing (Hz).
    pub df: f64,
}

impl Spectrum {
    /// Total power `Σ psd · Δf`.
    pub fn power(&self) -> f64 {
        self.psd.iter().sum::<f64>() * self.df
    }

    /// Largest density among the bins within half a bin of `freq`.
    pub fn peak_near(&self, freq: f64) -> f64 {
        let pos = freq / self.df;
        let lo = (pos - 0.5).ceil().max(0.0) as usize;
        let hi = ((pos + 0.5).floor() as usize).min(self.psd.len() - 1);
        (lo..=hi).map(|k| self.psd[k]).fold(0.0, f64::max)
    }

    /// Index of the largest bin.
    pub fn argmax(&self) -> usize {
        self.psd
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
            .unwrap_or(0)
    }
}

/// Windowed periodogram of the whole signal.
pub fn periodogram(sig: &Signal, window: Window) -> Result<Spectrum> {
    if sig.len() < MIN_PERIODOGRAM_LEN {
        return Err(Error::Analysis(format!(
            "periodogram needs at least {MIN_PERIODOGRAM_LEN} samples, got {}",
            sig.len()
        )));
    }
    let mut planner = FftPlanner::new();
    Ok(periodogram_with(&mut planner, &sig.samples, sig.rate as f64, window))
}

fn periodogram_with(
    planner: &mut FftPlanner<f64>,
    x: &[f64],
    rate: f64,
    window: Window,
) -> Spectrum {
    let n = x.len();
    let w = window.coefficients(n);
    let energy: f64 = w.iter().map(|v| v * v).sum();
    let mut buf: Vec<Complex<f64>> = x
        .iter()
        .zip(&w)
        .map(|(&v, &wv)| Complex::new(v * wv, 0.0))
        .collect();
    planner.plan_fft_forward(n).process(&mut buf);
    let half = n / 2;
    let scale = 1.0 / (rate * energy);
    let psd = (0..=half)
        .map(|k| {
            let p = buf[k].norm_sqr() * scale;
            if k == 0 || (n % 2 == 0 && k == half) {
                p
            } else {
                2.0 * p
            }
        })
        .collect();
    let df = rate / n as f64;
    Spectrum {
        freqs: (0..=half).map(|k| k as f64 * df).collect(),
        psd,
        window,
        df,
    }
}

/// Welch average of periodograms over segments of `seg_len` with 50 % overlap.
pub fn welch(sig: &Signal, seg_len: usize, window: Window) -> Result<Spectrum> {
    if seg_len < MIN_PERIODOGRAM_LEN || seg_len > sig.len() {
        return Err(Error::Analysis(format!(
            "segment length {seg_len} invalid for {} samples",
            sig.len()
        )));
    }
    let hop = (seg_len / 2).max(1);
    let mut planner = FftPlanner::new();
    let mut acc: Option<Spectrum> = None;
    let mut count = 0usize;
    let mut start = 0;
    while start + seg_len <= sig.len() {
        let s = periodogram_with(
            &mut planner,
            &sig.samples[start..start + seg_len],
            sig.rate as f64,
            window,
        );
        match acc.as_mut() {
            None => acc = Some(s),
            Some(a) => a.psd.iter_mut().zip(&s.psd).for_each(|(x, y)| *x += y),
        }
        count += 1;
        start += hop;
    }
    let mut out = acc.expect("at least one segment");
    out.psd.iter_mut().for_each(|p| *p /= count as f64);
    Ok(out)
}

/// Sequence of Hamming periodograms (columns) over a sliding window.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram {
    /// Center time of each column (s).
    pub times: Vec<f64>,
    pub freqs: Vec<f64>,
    /// `columns[t][f]`: one-sided PSD.
    pub columns: Vec<Vec<f64>>,
}

impl Spectrogram {
    /// Long-format CSV: `time_s,frequency_hz,power_db`.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = std::io::BufWriter::new(file);
        let io = |e| Error::io(path, e);
        writeln!(w, "time_s,frequency_hz,power_db").map_err(io)?;
        for (t, col) in self.times.iter().zip(&self.columns) {
            for (f, p) in self.freqs.iter().zip(col) {
                writeln!(w, "{t:.6},{f:.3},{:.3}", to_db(*p)).map_err(io)?;
            }
        }
        w.flush().map_err(io)
    }
}

pub fn to_db(p: f64) -> f64 {
    10.0 * p.max(1e-300).log10()
}

/// Hamming-windowed spectrogram with `win_len`-sample frames every `hop` samples.
///
/// Column count is `floor((N - win_len) / hop) + 1`.
pub fn spectrogram(sig: &Signal, win_len: usize, hop: usize) -> Result<Spectrogram> {
    if win_len > sig.len() || win_len < 2 || hop == 0 {
        return Err(Error::Analysis(format!(
            "spectrogram window {win_len} / hop {hop} invalid for {} samples",
            sig.len()
        )));
    }
    let mut planner = FftPlanner::new();
    let frames = (sig.len() - win_len) / hop + 1;
    let rate = sig.rate as f64;
    let mut times = Vec::with_capacity(frames);
    let mut columns = Vec::with_capacity(frames);
    let mut freqs = Vec::new();
    for k in 0..frames {
        let start = k * hop;
        let s = periodogram_with(
            &mut planner,
            &sig.samples[start..start + win_len],
            rate,
            Window::Hamming,
        );
        times.push((start as f64 + win_len as f64 / 2.0) / rate);
        if freqs.is_empty() {
            freqs = s.freqs;
        }
        columns.push(s.psd);
    }
    Ok(Spectrogram {
        times,
        freqs,
        columns,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tone(freq: f64, rate: u32, n: usize) -> Signal {
        Signal::new(
            (0..n)
                .map(|i| (2.0 * PI * freq * i as f64 / rate as f64).sin())
                .collect(),
            rate,
        )
    }

    #[test]
    fn rejects_short_input() {
        assert!(periodogram(&Signal::new(vec![], 8000), Window::Rect).is_err());
        assert!(periodogram(&Signal::new(vec![1.0; 15], 8000), Window::Rect).is_err());
    }

    #[test]
    fn exact_bin_sine_concentrates_power() {
        let s = tone(250.0, 8000, 1024);
        let p = periodogram(&s, Window::Rect).unwrap();
        let k = p.argmax();
        assert_eq!(k, 32);
        assert!((p.psd[k] * p.df - 0.5).abs() < 1e-12);
        let floor_db = p
            .psd
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != k)
            .map(|(_, &v)| to_db(v / p.psd[k]))
            .fold(f64::NEG_INFINITY, f64::max);
        assert!(floor_db < -250.0, "leakage {floor_db} dB");
    }

    #[test]
    fn parseval_holds_for_both_windows() {
        let x: Vec<f64> = (0..1001).map(|i| ((i * 7919) % 113) as f64 / 50.0 - 1.1).collect();
        let s = Signal::new(x.clone(), 8000);
        let rect = periodogram(&s, Window::Rect).unwrap();
        let mean_pow = x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64;
        assert!((rect.power() - mean_pow).abs() / mean_pow < 1e-10);
        let w = Window::Hamming.coefficients(x.len());
        let weighted = x.iter().zip(&w).map(|(a, b)| a * a * b * b).sum::<f64>()
            / w.iter().map(|b| b * b).sum::<f64>();
        let ham = periodogram(&s, Window::Hamming).unwrap();
        assert!((ham.power() - weighted).abs() / weighted < 1e-10);
    }

    #[test]
    fn spectrogram_shape_and_stationarity() {
        let s = tone(500.0, 8000, 8000);
        let sg = spectrogram(&s, 320, 16).unwrap();
        assert_eq!(sg.columns.len(), (8000 - 320) / 16 + 1);
        // 500 Hz repeats every 16 samples, so all frames see identical data.
        for col in &sg.columns[1..] {
            for (a, b) in col.iter().zip(&sg.columns[0]) {
                assert!((a - b).abs() <= 1e-10 * sg.columns[0].iter().cloned().fold(0.0, f64::max));
            }
        }
        assert!((sg.times[0] - 0.02).abs() < 1e-12);
    }

    #[test]
    fn spectrogram_rejects_long_window() {
        assert!(spectrogram(&Signal::new(vec![0.0; 10], 8000), 11, 1).is_err());
    }
}
