//! Headless PNG figures: confusion matrix, SHR accuracy bars and the
//! spectrogram-plus-probability view of a classified recording.

use std::path::Path;

use image::{Rgb, RgbImage};

use crate::dsp::to_db;
use crate::error::{Error, Result};
use crate::fcn::{AccuracyBin, Classification, ConfusionMatrix, NUM_CLASSES};

/// Trace colours of the four periods.
const CLASS_COLORS: [Rgb<u8>; NUM_CLASSES] = [
    Rgb([31, 119, 180]),
    Rgb([255, 127, 14]),
    Rgb([44, 160, 44]),
    Rgb([214, 39, 40]),
];
const WHITE: Rgb<u8> = Rgb([255, 255, 255]);
const GRID: Rgb<u8> = Rgb([200, 200, 200]);

fn save(img: &RgbImage, path: &Path) -> Result<()> {
    img.save(path).map_err(|e| Error::io(path, std::io::Error::other(e)))
}

/// Maps `v ∈ [0, 1]` from white to dark blue.
fn shade(v: f64) -> Rgb<u8> {
    let v = v.clamp(0.0, 1.0);
    let lerp = |a: f64, b: f64| (a + (b - a) * v).round() as u8;
    Rgb([lerp(255.0, 8.0), lerp(255.0, 48.0), lerp(255.0, 107.0)])
}

/// Row-normalized 4×4 heat map, true period top to bottom.
pub fn confusion_png(cm: &ConfusionMatrix, path: &Path) -> Result<()> {
    const CELL: u32 = 80;
    let mut img = RgbImage::from_pixel(CELL * 4 + 1, CELL * 4 + 1, GRID);
    for r in 0..NUM_CLASSES {
        let total = cm.row_sum(r as u32 + 1).max(1) as f64;
        for c in 0..NUM_CLASSES {
            let color = shade(cm.counts[r][c] as f64 / total);
            for y in 1..CELL {
                for x in 1..CELL {
                    img.put_pixel(c as u32 * CELL + x, r as u32 * CELL + y, color);
                }
            }
        }
    }
    save(&img, path)
}

/// Bar per SHR bin, height proportional to accuracy; empty bins stay blank.
pub fn shr_accuracy_png(bins: &[AccuracyBin], path: &Path) -> Result<()> {
    const BAR: u32 = 24;
    const HEIGHT: u32 = 200;
    let width = BAR * bins.len().max(1) as u32;
    let mut img = RgbImage::from_pixel(width, HEIGHT + 1, WHITE);
    for (i, b) in bins.iter().enumerate() {
        let Some(acc) = b.accuracy() else { continue };
        let h = (acc * HEIGHT as f64).round() as u32;
        for x in i as u32 * BAR + 2..(i as u32 + 1) * BAR - 2 {
            for y in HEIGHT - h..=HEIGHT {
                img.put_pixel(x, y, CLASS_COLORS[0]);
            }
        }
    }
    for x in 0..width {
        img.put_pixel(x, HEIGHT, GRID);
    }
    save(&img, path)
}

/// Spectrogram (0–4 kHz, 60 dB range) above the four probability traces,
/// one pixel column per snapshot.
pub fn classification_png(c: &Classification, path: &Path) -> Result<()> {
    const SPEC_H: u32 = 200;
    const PROB_H: u32 = 120;
    let cols = c.report.len().max(c.spectrogram.columns.len()).max(1) as u32;
    let mut img = RgbImage::from_pixel(cols, SPEC_H + PROB_H + 2, WHITE);
    let t0 = c.report.times.first().copied().unwrap_or(0.0);
    let dt = c.report.times.get(1).map_or(1.0, |t| t - t0);

    let spec = &c.spectrogram;
    let peak = spec
        .columns
        .iter()
        .flatten()
        .fold(f64::MIN_POSITIVE, |m, &p| m.max(p));
    let top = to_db(peak);
    let nf = spec.freqs.len().max(1);
    for (t, col) in spec.times.iter().zip(&spec.columns) {
        let x = ((t - t0) / dt).round();
        if x < 0.0 || x >= cols as f64 {
            continue;
        }
        for y in 0..SPEC_H {
            let bin = ((SPEC_H - 1 - y) as usize * nf) / SPEC_H as usize;
            let level = (to_db(col[bin]) - top + 60.0) / 60.0;
            img.put_pixel(x as u32, y, shade(level));
        }
    }
    for x in 0..cols {
        img.put_pixel(x, SPEC_H, GRID);
    }
    for (k, p) in c.report.probs.iter().enumerate() {
        for (m, &v) in p.iter().enumerate() {
            let y = SPEC_H + 1 + ((1.0 - v.clamp(0.0, 1.0)) * (PROB_H - 1) as f64).round() as u32;
            img.put_pixel(k as u32, y, CLASS_COLORS[m]);
        }
    }
    save(&img, path)
}
