//! Spectral view of synthetic subharmonic voices: resampling, the
//! periodogram around f_o/M multiples, SHR and a spectrogram CSV.
//!
//!     cargo run --release --example spectral_analysis

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use subharmonic::dataset::{ground_truth_shr, postprocess, sample_params, RAW_DURATION};
use subharmonic::dsp::{periodogram, spectrogram, to_db, Window};
use subharmonic::waveguide::simulate;

fn main() -> subharmonic::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for m in 1..=4 {
        let p = sample_params(&mut rng, m)?;
        let sig = postprocess(&simulate(&p, RAW_DURATION)?)?;
        let spec = periodogram(&sig, Window::Hamming)?;
        println!("M = {m}, fo = {:.1} Hz", p.fo);
        // Components at k fo / M; harmonics are the multiples of M.
        for k in 1..=2 * m {
            let f = k as f64 * p.fo / m as f64;
            let tag = if k % m == 0 { "harmonic" } else { "subharmonic" };
            println!("  {f:7.1} Hz  {:6.1} dB  {tag}", to_db(spec.peak_near(f)));
        }
        if m > 1 {
            println!("  SHR {:.1} dB", ground_truth_shr(&sig, p.fo, m)?);
        }
        if m == 3 {
            let sg = spectrogram(&sig, 320, 16)?;
            sg.write_csv("spectrogram_m3.csv")?;
            println!("  spectrogram: {} frames x {} bins -> spectrogram_m3.csv", sg.times.len(), sg.freqs.len());
        }
    }
    Ok(())
}
