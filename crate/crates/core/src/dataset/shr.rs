use crate::dsp::{periodogram, Window};
use crate::error::{Error, Result};
use crate::signal::Signal;

/// Upper frequency limit of the harmonic/subharmonic sums (Hz).
pub const SHR_BAND_LIMIT: f64 = 4000.0;

/// Subharmonic-to-harmonic ratio (dB) of a signal with known `fo` and period `m`.
///
/// The Hamming-windowed periodogram of the whole signal is read at every
/// multiple `k · fo / m` below 4 kHz; multiples of `m` are harmonics, the
/// rest subharmonics. Each reading is the largest bin within half a bin of
/// the target frequency.
pub fn ground_truth_shr(sig: &Signal, fo: f64, m: u32) -> Result<f64> {
    if m < 2 {
        return Err(Error::Analysis(format!("SHR needs M > 1, got {m}")));
    }
    let spectrum = periodogram(sig, Window::Hamming)?;
    let spacing = fo / m as f64;
    if !(spacing >= 2.0 * spectrum.df) {
        return Err(Error::Analysis(format!(
            "fo/M = {spacing:.3} Hz is below the spectral resolution ({:.3} Hz bins)",
            spectrum.df
        )));
    }
    let limit = SHR_BAND_LIMIT.min(sig.rate as f64 / 2.0);
    let (mut sub, mut harm) = (0.0, 0.0);
    let mut k = 1u32;
    loop {
        let f = k as f64 * spacing;
        if f >= limit {
            break;
        }
        let s = spectrum.peak_near(f);
        if k % m == 0 {
            harm += s;
        } else {
            sub += s;
        }
        k += 1;
    }
    if harm <= 0.0 {
        return Err(Error::Analysis("no harmonic energy".into()));
    }
    Ok(10.0 * (sub.max(f64::MIN_POSITIVE) / harm).log10())
}
