use std::f64::consts::PI;

use subharmonic::dsp::{normalize, resample, resample_to};
use subharmonic::Signal;

fn tone(f: f64, rate: u32, secs: f64) -> Signal {
    let n = (secs * rate as f64) as usize;
    Signal::new((0..n).map(|i| (2.0 * PI * f * i as f64 / rate as f64).sin()).collect(), rate)
}

/// Least-squares fit of `a sin + b cos` at `f` over the interior of `x`;
/// returns (amplitude, rms residual).
fn fit(x: &Signal, f: f64) -> (f64, f64) {
    let skip = x.len() / 10;
    let mid = &x.samples[skip..x.len() - skip];
    let w = 2.0 * PI * f / x.rate as f64;
    let (mut ss, mut cc, mut sc, mut ys, mut yc) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (j, &y) in mid.iter().enumerate() {
        let ph = w * (j + skip) as f64;
        let (s, c) = ph.sin_cos();
        ss += s * s;
        cc += c * c;
        sc += s * c;
        ys += y * s;
        yc += y * c;
    }
    let det = ss * cc - sc * sc;
    let a = (ys * cc - yc * sc) / det;
    let b = (yc * ss - ys * sc) / det;
    let resid = mid
        .iter()
        .enumerate()
        .map(|(j, &y)| {
            let ph = w * (j + skip) as f64;
            (y - a * ph.sin() - b * ph.cos()).powi(2)
        })
        .sum::<f64>()
        / mid.len() as f64;
    ((a * a + b * b).sqrt(), resid.sqrt())
}

fn rms_interior(x: &Signal) -> f64 {
    let skip = x.len() / 10;
    let mid = &x.samples[skip..x.len() - skip];
    (mid.iter().map(|v| v * v).sum::<f64>() / mid.len() as f64).sqrt()
}

fn db(x: f64) -> f64 {
    20.0 * x.log10()
}

#[test]
fn passband_ripple_below_a_tenth_of_a_db() {
    // 0.4 of the 4 kHz output Nyquist.
    let mut f = 50.0;
    while f <= 1600.0 {
        let y = resample_to(&tone(f, 44_100, 0.5), 8000);
        assert_eq!(y.rate, 8000);
        let (amp, _) = fit(&y, f);
        assert!(db(amp).abs() < 0.1, "{f} Hz: {} dB", db(amp));
        f += 77.0;
    }
}

#[test]
fn stopband_attenuation_at_least_60_db() {
    for &f in &[4100.0, 4500.0, 6000.0, 9000.0, 12_345.0, 16_000.0, 21_000.0] {
        let y = resample_to(&tone(f, 44_100, 0.5), 8000);
        // Input rms is 1/√2.
        let level = db(rms_interior(&y) * 2f64.sqrt());
        assert!(level <= -60.0, "{f} Hz leaks at {level} dB");
    }
}

#[test]
fn one_khz_tone_has_no_spurs_above_minus_60_db() {
    let y = resample_to(&tone(1000.0, 44_100, 1.1), 8000);
    assert_eq!(y.len(), 8800);
    let (amp, resid) = fit(&y, 1000.0);
    assert!(db(resid * 2f64.sqrt() / amp) < -60.0);
}

#[test]
fn halving_round_trip_keeps_the_low_band() {
    let rate = 16_000;
    let low = tone(700.0, rate, 1.0);
    let high = tone(6000.0, rate, 1.0);
    let mixed = Signal::new(low.samples.iter().zip(&high.samples).map(|(a, b)| a + b).collect(), rate);
    let y = resample(&resample(&mixed, 1, 2), 2, 1);
    assert_eq!(y.rate, rate);
    let (amp, resid) = fit(&y, 700.0);
    assert!(db(amp).abs() < 0.2, "{}", db(amp));
    assert!(db(resid * 2f64.sqrt()) < -60.0, "{}", db(resid));
}

#[test]
fn upsampling_then_downsampling_is_close_to_identity() {
    let x = tone(440.0, 8000, 1.0);
    let y = resample(&resample(&x, 441, 80), 80, 441);
    assert_eq!(y.len(), x.len());
    let skip = 800;
    let err = x.samples[skip..x.len() - skip]
        .iter()
        .zip(&y.samples[skip..])
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    assert!(err < 2e-3, "{err}");
}

#[test]
fn normalize_gives_zero_mean_unit_variance() {
    let x = Signal::new((0..1000).map(|i| 3.0 + (i as f64 * 0.37).sin() * 5.0).collect(), 8000);
    let y = normalize(&x).unwrap();
    assert!(y.mean().abs() < 1e-12);
    assert!((y.variance() - 1.0).abs() < 1e-12);
    assert!(normalize(&Signal::new(vec![2.0; 100], 8000)).is_err());
}
