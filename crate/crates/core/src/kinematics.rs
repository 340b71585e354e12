//! Kinematic vocal-fold model with subharmonic modulation.
//!
//! The medial surface of each (symmetric) fold is prescribed directly: a
//! prephonatory shape `ξ0(y, z)` plus a vibration term whose depth-dependent
//! phase produces the convergent/divergent motion of the folds. The glottal
//! area is the integral, along the fold length, of the narrowest opening
//! found through the fold thickness.
//!
//! Coordinates: `y` runs along the vibrating length `[0, L]` (cm), `z`
//! through the thickness `[0, T]` (cm), lower edge at `z = 0`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::Signal;

/// Default number of grid nodes along the fold length.
pub const DEFAULT_NY: usize = 21;
/// Default number of grid nodes through the fold thickness.
pub const DEFAULT_NZ: usize = 15;

/// `sin(πy/L)`, exactly zero at both fold ends.
fn length_mode(y: f64, length: f64) -> f64 {
    (PI * y.min(length - y) / length).sin()
}

/// Geometry of the symmetric vocal folds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VocalFoldGeometry {
    /// Vibrating length `L` (cm).
    pub length: f64,
    /// Vibrating thickness `T` (cm).
    pub thickness: f64,
    /// Maximum displacement amplitude `ξm` (cm).
    pub max_displacement: f64,
    /// Abduction quotient `Qa`.
    pub abduction: f64,
    /// Shape quotient `Qs`.
    pub shape: f64,
    /// Bulging quotient `Qb`.
    pub bulging: f64,
    /// Phase quotient `Qp`.
    pub phase_quotient: f64,
    /// Nodal point ratio `Rzn`, the pivot height relative to `T`.
    pub nodal_ratio: f64,
}

impl VocalFoldGeometry {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("length", self.length),
            ("thickness", self.thickness),
        ];
        for (field, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParam {
                    field,
                    reason: format!("{v} must be positive"),
                });
            }
        }
        if !(self.max_displacement >= 0.0 && self.max_displacement.is_finite()) {
            return Err(Error::InvalidParam {
                field: "max_displacement",
                reason: format!("{} must be non-negative", self.max_displacement),
            });
        }
        if !(self.nodal_ratio > 0.0 && self.nodal_ratio < 1.0) {
            return Err(Error::InvalidParam {
                field: "nodal_ratio",
                reason: format!("{} must lie in (0, 1)", self.nodal_ratio),
            });
        }
        Ok(())
    }

    fn check_y(&self, y: f64) -> Result<()> {
        if (0.0..=self.length).contains(&y) {
            Ok(())
        } else {
            Err(Error::Domain {
                what: "y",
                value: y,
                lo: 0.0,
                hi: self.length,
            })
        }
    }

    fn check_z(&self, z: f64) -> Result<()> {
        if (0.0..=self.thickness).contains(&z) {
            Ok(())
        } else {
            Err(Error::Domain {
                what: "z",
                value: z,
                lo: 0.0,
                hi: self.thickness,
            })
        }
    }

    /// Prephonatory medial-edge position `ξ0(y, z)` in cm.
    ///
    /// May be negative (pressed folds); clamping happens in [`displacement`].
    pub fn prephonatory_position(&self, y: f64, z: f64) -> Result<f64> {
        self.check_y(y)?;
        self.check_z(z)?;
        Ok(self.prephonatory_unchecked(y, z))
    }

    fn prephonatory_unchecked(&self, y: f64, z: f64) -> f64 {
        let zr = z / self.thickness;
        (self.abduction + (self.shape - 4.0 * self.bulging * zr) * (1.0 - zr)) * (1.0 - y / self.length)
    }

    /// Phase delay (rad) of the vibration at depth `z` relative to the nodal point.
    pub fn phase_delay(&self, z: f64) -> Result<f64> {
        self.check_z(z)?;
        Ok(self.phase_delay_unchecked(z))
    }

    fn phase_delay_unchecked(&self, z: f64) -> f64 {
        -2.0 * PI * self.phase_quotient * (z / self.thickness - self.nodal_ratio)
    }
}

/// Subharmonic amplitude/frequency modulation of the reference vibration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModulationSpec {
    /// Subharmonic period `M` (number of glottal cycles per pattern repeat).
    pub period: u32,
    /// Speaking fundamental frequency (Hz).
    pub fo: f64,
    pub am_extent: f64,
    pub fm_extent: f64,
    /// AM phase (rad).
    pub am_phase: f64,
    /// FM phase (rad).
    pub fm_phase: f64,
}

impl ModulationSpec {
    /// Unmodulated vibration at `fo`.
    pub fn normal(fo: f64) -> Self {
        ModulationSpec {
            period: 1,
            fo,
            am_extent: 0.0,
            fm_extent: 0.0,
            am_phase: 0.0,
            fm_phase: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=4).contains(&self.period) {
            return Err(Error::InvalidParam {
                field: "M",
                reason: format!("{} not in {{1, 2, 3, 4}}", self.period),
            });
        }
        if !(self.fo > 0.0 && self.fo.is_finite()) {
            return Err(Error::InvalidParam {
                field: "fo",
                reason: format!("{} must be positive", self.fo),
            });
        }
        Ok(())
    }

    /// Reference vibration `r(t; φ)`.
    ///
    /// For `M = 1` this is `sin(2π fo t − φ)`. For `M > 1` the carrier is
    /// amplitude- and frequency-modulated by a sinusoid at `fo / M`, so the
    /// waveform repeats every `M / fo` seconds.
    pub fn reference_vibration(&self, t: f64, varphi: f64) -> f64 {
        let phase = 2.0 * PI * self.fo * t - varphi;
        self.reference_at_phase(phase)
    }

    #[inline]
    fn reference_at_phase(&self, phase: f64) -> f64 {
        if self.period <= 1 {
            return phase.sin();
        }
        let m = self.period as f64;
        let sub = phase / m;
        let envelope = 1.0 + self.am_extent * (sub + self.am_phase).sin();
        let carrier = (phase + self.fm_extent * m * (sub + self.fm_phase).sin()).sin();
        envelope * carrier
    }
}

/// Uniform node grid over the medial surface, endpoints included.
#[derive(Debug, Clone, PartialEq)]
pub struct FoldGrid {
    pub ys: Vec<f64>,
    pub zs: Vec<f64>,
}

impl FoldGrid {
    pub fn new(geom: &VocalFoldGeometry, n_y: usize, n_z: usize) -> Result<Self> {
        if n_y < 2 || n_z < 2 {
            return Err(Error::InvalidParam {
                field: "grid",
                reason: format!("need at least 2x2 nodes, got {n_y}x{n_z}"),
            });
        }
        let lin = |n: usize, hi: f64| -> Vec<f64> {
            (0..n).map(|i| hi * i as f64 / (n - 1) as f64).collect()
        };
        Ok(FoldGrid {
            ys: lin(n_y, geom.length),
            zs: lin(n_z, geom.thickness),
        })
    }

    /// The 21 x 15 grid used for synthesis.
    pub fn standard(geom: &VocalFoldGeometry) -> Result<Self> {
        Self::new(geom, DEFAULT_NY, DEFAULT_NZ)
    }

    pub fn n_y(&self) -> usize {
        self.ys.len()
    }

    pub fn n_z(&self) -> usize {
        self.zs.len()
    }
}

/// Clamped displacement `ξ(y, z, t)` sampled on a [`FoldGrid`], row-major in `y`.
#[derive(Debug, Clone, PartialEq)]
pub struct DisplacementField {
    pub n_y: usize,
    pub n_z: usize,
    pub values: Vec<f64>,
}

impl DisplacementField {
    pub fn get(&self, iy: usize, iz: usize) -> f64 {
        self.values[iy * self.n_z + iz]
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Displacement of the fold surface on `grid` at time `t`, clamped at the midline.
pub fn displacement(
    geom: &VocalFoldGeometry,
    modulation: &ModulationSpec,
    grid: &FoldGrid,
    t: f64,
) -> DisplacementField {
    let refs: Vec<f64> = grid
        .zs
        .iter()
        .map(|&z| modulation.reference_vibration(t, geom.phase_delay_unchecked(z)))
        .collect();
    let mut values = Vec::with_capacity(grid.n_y() * grid.n_z());
    for &y in &grid.ys {
        let mode = geom.max_displacement * length_mode(y, geom.length);
        for (&z, &r) in grid.zs.iter().zip(&refs) {
            let free = geom.prephonatory_unchecked(y, z) + mode * r;
            values.push(free.max(0.0));
        }
    }
    DisplacementField {
        n_y: grid.n_y(),
        n_z: grid.n_z(),
        values,
    }
}

/// Glottal area (cm²): twice the trapezoidal integral over `y` of the
/// minimum-over-depth displacement, clamped at the midline.
///
/// The depth minimum is refined between nodes and cells that close partway
/// are cut at the closure point, so the standard grid tracks a much finer
/// one even near closure.
pub fn glottal_area(
    geom: &VocalFoldGeometry,
    modulation: &ModulationSpec,
    grid: &FoldGrid,
    t: f64,
) -> f64 {
    let refs: Vec<f64> = grid
        .zs
        .iter()
        .map(|&z| modulation.reference_vibration(t, geom.phase_delay_unchecked(z)))
        .collect();
    let mut row = vec![0.0; grid.n_z()];
    let min_rows: Vec<f64> = grid
        .ys
        .iter()
        .map(|&y| {
            let mode = geom.max_displacement * length_mode(y, geom.length);
            for ((v, &z), &r) in row.iter_mut().zip(&grid.zs).zip(&refs) {
                *v = geom.prephonatory_unchecked(y, z) + mode * r;
            }
            narrowest(&row)
        })
        .collect();
    2.0 * open_trapezoid(&grid.ys, &min_rows)
}

/// Minimum over depth of one row of unclamped displacements on a uniform `z`
/// grid: the smallest node, lowered to the vertex of the parabola through the
/// three nodes around it when that vertex lies between them.
///
/// Never exceeds the smallest node. The row must have at least 2 entries.
fn narrowest(row: &[f64]) -> f64 {
    let (k, &fk) = row
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("non-empty row");
    if row.len() < 3 {
        return fk;
    }
    let c = k.clamp(1, row.len() - 2);
    let (f0, f1, f2) = (row[c - 1], row[c], row[c + 1]);
    let curv = f0 - 2.0 * f1 + f2;
    if curv <= 0.0 {
        return fk;
    }
    // Vertex offset from the centre node, in grid steps.
    let x = (f0 - f2) / (2.0 * curv);
    let lo = if k < c { -1.0 } else if k > c { 0.0 } else { -0.5 };
    let hi = if k < c { 0.0 } else if k > c { 1.0 } else { 0.5 };
    if (lo..=hi).contains(&x) {
        (f1 - (f2 - f0) * (f2 - f0) / (8.0 * curv)).min(fk)
    } else {
        fk
    }
}

/// Integral of the positive part of the piecewise-linear interpolant through
/// `(xs, ys)`: the trapezoidal rule, with cells that cross zero cut at the
/// crossing.
fn open_trapezoid(xs: &[f64], ys: &[f64]) -> f64 {
    xs.windows(2)
        .zip(ys.windows(2))
        .map(|(x, y)| cell_area(x[1] - x[0], y[0], y[1]))
        .sum()
}

#[inline]
fn cell_area(h: f64, y0: f64, y1: f64) -> f64 {
    match (y0 > 0.0, y1 > 0.0) {
        (true, true) => 0.5 * h * (y0 + y1),
        (false, false) => 0.0,
        _ => {
            let (p, n) = if y0 > 0.0 { (y0, y1) } else { (y1, y0) };
            0.5 * h * p * p / (p - n)
        }
    }
}

/// Precomputed glottal-area evaluator for the per-sample synthesis loop.
///
/// Produces the same values as [`glottal_area`] but caches `ξ0`, the length
/// mode, and the per-depth phase delays.
#[derive(Debug, Clone)]
pub struct GlottalAreaModel {
    modulation: ModulationSpec,
    /// `ξ0` per node, row-major in `y`.
    rest: Vec<f64>,
    /// `ξm sin(π y / L)` per `y` node.
    mode: Vec<f64>,
    phase: Vec<f64>,
    ys: Vec<f64>,
    refs: Vec<f64>,
    row: Vec<f64>,
    /// Unclamped minimum over depth per `y` node.
    narrow: Vec<f64>,
}

impl GlottalAreaModel {
    pub fn new(geom: &VocalFoldGeometry, modulation: &ModulationSpec, grid: &FoldGrid) -> Self {
        let mut rest = Vec::with_capacity(grid.n_y() * grid.n_z());
        for &y in &grid.ys {
            for &z in &grid.zs {
                rest.push(geom.prephonatory_unchecked(y, z));
            }
        }
        let mode = grid
            .ys
            .iter()
            .map(|&y| geom.max_displacement * length_mode(y, geom.length))
            .collect();
        let phase = grid
            .zs
            .iter()
            .map(|&z| geom.phase_delay_unchecked(z))
            .collect();
        GlottalAreaModel {
            modulation: *modulation,
            rest,
            mode,
            phase,
            ys: grid.ys.clone(),
            refs: vec![0.0; grid.n_z()],
            row: vec![0.0; grid.n_z()],
            narrow: vec![0.0; grid.n_y()],
        }
    }

    pub fn area(&mut self, t: f64) -> f64 {
        let base = 2.0 * PI * self.modulation.fo * t;
        for (r, &ph) in self.refs.iter_mut().zip(&self.phase) {
            *r = self.modulation.reference_at_phase(base - ph);
        }
        let nz = self.refs.len();
        for (iy, &mode) in self.mode.iter().enumerate() {
            let rest = &self.rest[iy * nz..(iy + 1) * nz];
            for ((v, &x0), &r) in self.row.iter_mut().zip(rest).zip(&self.refs) {
                *v = x0 + mode * r;
            }
            self.narrow[iy] = narrowest(&self.row);
        }
        2.0 * open_trapezoid(&self.ys, &self.narrow)
    }
}

/// Extremes of peak amplitudes and peak-to-peak periods of a modulated waveform.
///
/// Extents measured on signals with different modulation phases can be
/// combined with [`ModulationExtents::merge`], extremizing over phase as well
/// as time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModulationExtents {
    pub amp_min: f64,
    pub amp_max: f64,
    pub period_min: f64,
    pub period_max: f64,
}

impl ModulationExtents {
    pub fn am(&self) -> f64 {
        (self.amp_max - self.amp_min) / (self.amp_max + self.amp_min)
    }

    pub fn fm(&self) -> f64 {
        (self.period_max - self.period_min) / (self.period_max + self.period_min)
    }

    pub fn merge(self, other: ModulationExtents) -> ModulationExtents {
        ModulationExtents {
            amp_min: self.amp_min.min(other.amp_min),
            amp_max: self.amp_max.max(other.amp_max),
            period_min: self.period_min.min(other.period_min),
            period_max: self.period_max.max(other.period_max),
        }
    }
}

/// Measures AM/FM extents of a collision-free waveform from its cycle peaks.
///
/// Peaks are local maxima at least `0.5 / fo` apart, refined by parabolic
/// interpolation; periods are measured peak to peak.
pub fn measure_modulation_extents(
    signal: &Signal,
    fo: f64,
    period: u32,
) -> Result<ModulationExtents> {
    let min_distance = (0.5 * signal.rate as f64 / fo).floor() as usize;
    let peaks = find_peaks(&signal.samples, min_distance.max(1));
    let needed = 4 * period.max(1) as usize;
    if peaks.len() < needed + 1 {
        return Err(Error::Analysis(format!(
            "found {} cycle peaks, need at least {}",
            peaks.len(),
            needed + 1
        )));
    }
    let refined: Vec<(f64, f64)> = peaks
        .iter()
        .map(|&i| parabolic_peak(&signal.samples, i))
        .collect();
    let mut ext = ModulationExtents {
        amp_min: f64::INFINITY,
        amp_max: f64::NEG_INFINITY,
        period_min: f64::INFINITY,
        period_max: f64::NEG_INFINITY,
    };
    for &(_, a) in &refined {
        ext.amp_min = ext.amp_min.min(a);
        ext.amp_max = ext.amp_max.max(a);
    }
    let dt = 1.0 / signal.rate as f64;
    for w in refined.windows(2) {
        let p = (w[1].0 - w[0].0) * dt;
        ext.period_min = ext.period_min.min(p);
        ext.period_max = ext.period_max.max(p);
    }
    Ok(ext)
}

/// Interior local maxima, thinned greedily by height so that no two kept
/// peaks are closer than `min_distance` samples.
fn find_peaks(x: &[f64], min_distance: usize) -> Vec<usize> {
    let mut candidates: Vec<usize> = (1..x.len().saturating_sub(1))
        .filter(|&i| x[i] > x[i - 1] && x[i] >= x[i + 1])
        .collect();
    candidates.sort_by(|&a, &b| x[b].total_cmp(&x[a]).then(a.cmp(&b)));
    let mut kept: Vec<usize> = Vec::new();
    for c in candidates {
        if kept.iter().all(|&k| k.abs_diff(c) >= min_distance) {
            kept.push(c);
        }
    }
    kept.sort_unstable();
    kept
}

/// Vertex of the parabola through `x[i-1], x[i], x[i+1]`: (fractional index, value).
fn parabolic_peak(x: &[f64], i: usize) -> (f64, f64) {
    let (a, b, c) = (x[i - 1], x[i], x[i + 1]);
    let denom = a - 2.0 * b + c;
    if denom == 0.0 {
        return (i as f64, b);
    }
    let delta = 0.5 * (a - c) / denom;
    (i as f64 + delta, b - 0.25 * (a - c) * delta)
}
