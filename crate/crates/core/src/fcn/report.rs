//! Per-snapshot outputs and the aggregate tables built from them.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{FcnVariant, NUM_CLASSES};
use crate::error::{Error, Result};

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Period probabilities of every snapshot of one signal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotReport {
    pub variant: FcnVariant,
    /// Window-center time of each snapshot (s).
    pub times: Vec<f64>,
    /// `probs[k][m - 1]` is the probability that snapshot `k` has period `m`.
    pub probs: Vec<[f64; NUM_CLASSES]>,
}

impl SnapshotReport {
    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// Most probable period of snapshot `k`; ties resolve to the smaller period.
    pub fn m_hat(&self, k: usize) -> u32 {
        argmax(&self.probs[k]) as u32 + 1
    }

    pub fn p_m_hat(&self, k: usize) -> f64 {
        self.probs[k][self.m_hat(k) as usize - 1]
    }

    pub fn predictions(&self) -> Vec<u32> {
        (0..self.len()).map(|k| self.m_hat(k)).collect()
    }

    /// Most frequent prediction; ties resolve to the smaller period.
    pub fn modal(&self) -> Option<u32> {
        if self.is_empty() {
            return None;
        }
        let mut counts = [0usize; NUM_CLASSES];
        for m in self.predictions() {
            counts[m as usize - 1] += 1;
        }
        Some(argmax(&counts) as u32 + 1)
    }

    /// Share of snapshots predicted as period `m`.
    pub fn fraction(&self, m: u32) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        self.predictions().iter().filter(|&&p| p == m).count() as f64 / self.len() as f64
    }

    /// CSV with header `time_s,p1,p2,p3,p4,m_hat,p_m_hat`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("time_s,p1,p2,p3,p4,m_hat,p_m_hat\n");
        for (k, (t, p)) in self.times.iter().zip(&self.probs).enumerate() {
            let _ = writeln!(
                out,
                "{t:.6},{:.6},{:.6},{:.6},{:.6},{},{:.6}",
                p[0],
                p[1],
                p[2],
                p[3],
                self.m_hat(k),
                self.p_m_hat(k)
            );
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        write_text(path.as_ref(), &self.to_csv())
    }
}

/// Index of the first maximum.
fn argmax<V: PartialOrd + Copy>(v: &[V]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate().skip(1) {
        if *x > v[best] {
            best = i;
        }
    }
    best
}

/// Snapshot counts, true period by row, predicted period by column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: [[u64; NUM_CLASSES]; NUM_CLASSES],
}

impl ConfusionMatrix {
    pub fn add(&mut self, truth: u32, predicted: u32) {
        self.counts[truth as usize - 1][predicted as usize - 1] += 1;
    }

    pub fn add_all(&mut self, truth: u32, predicted: &[u32]) {
        for &p in predicted {
            self.add(truth, p);
        }
    }

    pub fn merge(&mut self, other: &ConfusionMatrix) {
        for (r, o) in self.counts.iter_mut().zip(&other.counts) {
            for (c, v) in r.iter_mut().zip(o) {
                *c += v;
            }
        }
    }

    pub fn row_sum(&self, truth: u32) -> u64 {
        self.counts[truth as usize - 1].iter().sum()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn correct(&self) -> u64 {
        (0..NUM_CLASSES).map(|i| self.counts[i][i]).sum()
    }

    /// Overall snapshot accuracy; zero for an empty matrix.
    pub fn accuracy(&self) -> f64 {
        ratio(self.correct(), self.total())
    }

    pub fn class_accuracy(&self, truth: u32) -> f64 {
        let i = truth as usize - 1;
        ratio(self.counts[i][i], self.row_sum(truth))
    }

    /// CSV with header `true_m,pred_1,pred_2,pred_3,pred_4,accuracy` and a
    /// final `all` row whose accuracy is the overall accuracy.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("true_m,pred_1,pred_2,pred_3,pred_4,accuracy\n");
        for m in 1..=NUM_CLASSES as u32 {
            let r = &self.counts[m as usize - 1];
            let _ = writeln!(
                out,
                "{m},{},{},{},{},{:.4}",
                r[0],
                r[1],
                r[2],
                r[3],
                self.class_accuracy(m)
            );
        }
        let mut col = [0u64; NUM_CLASSES];
        for r in &self.counts {
            for (c, v) in col.iter_mut().zip(r) {
                *c += v;
            }
        }
        let _ = writeln!(
            out,
            "all,{},{},{},{},{:.4}",
            col[0],
            col[1],
            col[2],
            col[3],
            self.accuracy()
        );
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        write_text(path.as_ref(), &self.to_csv())
    }
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Classification outcome of one labelled signal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalScore {
    pub id: u64,
    pub m: u32,
    pub fo: f64,
    pub shr_db: Option<f64>,
    pub snapshots: u64,
    pub correct: u64,
    pub modal: u32,
}

impl SignalScore {
    pub fn accuracy(&self) -> f64 {
        ratio(self.correct, self.snapshots)
    }
}

/// Snapshot accuracy of the signals whose SHR falls in `[lo, hi)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AccuracyBin {
    pub lo: f64,
    pub hi: f64,
    pub signals: usize,
    pub snapshots: u64,
    pub correct: u64,
}

impl AccuracyBin {
    pub fn accuracy(&self) -> Option<f64> {
        (self.snapshots > 0).then(|| ratio(self.correct, self.snapshots))
    }
}

/// Lower and upper SHR limits of the binned accuracy table (dB).
pub const SHR_RANGE: (f64, f64) = (-30.0, 0.0);

/// Bins `M > 1` signals by SHR over [`SHR_RANGE`]; the top edge is closed.
/// Signals outside the range are left out.
pub fn accuracy_by_shr(scores: &[SignalScore], width: f64) -> Result<Vec<AccuracyBin>> {
    if !(width > 0.0 && width.is_finite()) {
        return Err(Error::InvalidParam {
            field: "shr_bin_width",
            reason: format!("must be positive, got {width}"),
        });
    }
    let (lo, hi) = SHR_RANGE;
    let n = ((hi - lo) / width).ceil() as usize;
    let mut bins: Vec<AccuracyBin> = (0..n)
        .map(|i| AccuracyBin {
            lo: lo + i as f64 * width,
            hi: (lo + (i + 1) as f64 * width).min(hi),
            signals: 0,
            snapshots: 0,
            correct: 0,
        })
        .collect();
    for s in scores.iter().filter(|s| s.m > 1) {
        let Some(shr) = s.shr_db else { continue };
        if !(lo..=hi).contains(&shr) {
            continue;
        }
        let i = (((shr - lo) / width).floor() as usize).min(n - 1);
        bins[i].signals += 1;
        bins[i].snapshots += s.snapshots;
        bins[i].correct += s.correct;
    }
    Ok(bins)
}

/// CSV with header `shr_lo_db,shr_hi_db,signals,snapshots,accuracy`; empty
/// bins leave the accuracy blank.
pub fn shr_table_csv(bins: &[AccuracyBin]) -> String {
    let mut out = String::from("shr_lo_db,shr_hi_db,signals,snapshots,accuracy\n");
    for b in bins {
        let acc = b.accuracy().map(|a| format!("{a:.4}")).unwrap_or_default();
        let _ = writeln!(out, "{:.2},{:.2},{},{},{acc}", b.lo, b.hi, b.signals, b.snapshots);
    }
    out
}

/// Least-squares line `y = intercept + slope · x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub n: usize,
}

impl LinearFit {
    /// `None` with fewer than two points or no spread in `x`.
    pub fn fit(points: &[(f64, f64)]) -> Option<LinearFit> {
        let n = points.len();
        if n < 2 {
            return None;
        }
        let mx = points.iter().map(|p| p.0).sum::<f64>() / n as f64;
        let my = points.iter().map(|p| p.1).sum::<f64>() / n as f64;
        let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
        let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        if sxx <= 0.0 {
            return None;
        }
        let slope = sxy / sxx;
        Some(LinearFit {
            slope,
            intercept: my - slope * mx,
            n,
        })
    }

    pub fn at(&self, x: f64) -> f64 {
        self.intercept + self.slope * x
    }
}

/// Per-signal snapshot accuracy against `fo`, fitted for each period and for all signals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoTrend {
    /// `None` for the fit over every class.
    pub m: Option<u32>,
    pub fit: Option<LinearFit>,
}

pub fn accuracy_vs_fo(scores: &[SignalScore]) -> Vec<FoTrend> {
    let points = |m: Option<u32>| -> Vec<(f64, f64)> {
        scores
            .iter()
            .filter(|s| m.is_none_or(|m| s.m == m))
            .map(|s| (s.fo, s.accuracy()))
            .collect()
    };
    (1..=NUM_CLASSES as u32)
        .map(Some)
        .chain([None])
        .map(|m| FoTrend {
            m,
            fit: LinearFit::fit(&points(m)),
        })
        .collect()
}

/// CSV with header `m,signals,slope_per_hz,intercept`; `m` is `all` for the pooled fit.
pub fn fo_table_csv(trends: &[FoTrend]) -> String {
    let mut out = String::from("m,signals,slope_per_hz,intercept\n");
    for t in trends {
        let m = t.m.map(|m| m.to_string()).unwrap_or_else(|| "all".into());
        match t.fit {
            Some(f) => {
                let _ = writeln!(out, "{m},{},{:.6e},{:.6}", f.n, f.slope, f.intercept);
            }
            None => {
                let _ = writeln!(out, "{m},0,,");
            }
        }
    }
    out
}

/// CSV with header `id,m,fo_hz,shr_db,snapshots,correct,accuracy,modal_m`.
pub fn scores_csv(scores: &[SignalScore]) -> String {
    let mut out = String::from("id,m,fo_hz,shr_db,snapshots,correct,accuracy,modal_m\n");
    for s in scores {
        let shr = s.shr_db.map(|v| format!("{v:.3}")).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{:.3},{shr},{},{},{:.4},{}",
            s.id,
            s.m,
            s.fo,
            s.snapshots,
            s.correct,
            s.accuracy(),
            s.modal
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn report(probs: Vec<[f64; 4]>) -> SnapshotReport {
        SnapshotReport {
            variant: FcnVariant::Fcn401,
            times: (0..probs.len()).map(|k| k as f64 * 0.002).collect(),
            probs,
        }
    }

    #[test]
    fn argmax_and_modal() {
        let r = report(vec![
            [0.1, 0.8, 0.1, 0.0],
            [0.5, 0.5, 0.0, 0.0],
            [0.0, 0.9, 0.2, 0.1],
        ]);
        assert_eq!(r.predictions(), vec![2, 1, 2]);
        assert_eq!(r.modal(), Some(2));
        assert!((r.p_m_hat(2) - 0.9).abs() < 1e-15);
        assert!((r.fraction(2) - 2.0 / 3.0).abs() < 1e-15);
        let csv = r.to_csv();
        assert!(csv.starts_with("time_s,p1,p2,p3,p4,m_hat,p_m_hat\n"));
        assert_eq!(csv.lines().count(), 4);
    }

    #[test]
    fn confusion_rows_sum_to_class_counts() {
        let mut c = ConfusionMatrix::default();
        c.add_all(1, &[1, 1, 2]);
        c.add_all(3, &[3, 4]);
        assert_eq!(c.row_sum(1), 3);
        assert_eq!(c.row_sum(3), 2);
        assert_eq!(c.row_sum(2), 0);
        assert_eq!(c.total(), 5);
        assert!((c.accuracy() - 0.6).abs() < 1e-15);
        assert!((c.class_accuracy(3) - 0.5).abs() < 1e-15);
        assert!(c.to_csv().contains("all,2,1,1,1,0.6000"));
    }

    fn score(m: u32, fo: f64, shr: Option<f64>, correct: u64) -> SignalScore {
        SignalScore {
            id: 0,
            m,
            fo,
            shr_db: shr,
            snapshots: 10,
            correct,
            modal: m,
        }
    }

    #[test]
    fn shr_bins_cover_range_and_skip_normal_voicing() {
        let s = vec![
            score(2, 100.0, Some(-30.0), 10),
            score(2, 100.0, Some(0.0), 5),
            score(3, 100.0, Some(-1.0), 3),
            score(2, 100.0, Some(-35.0), 3),
            score(1, 100.0, None, 10),
        ];
        let bins = accuracy_by_shr(&s, 2.0).unwrap();
        assert_eq!(bins.len(), 15);
        assert_eq!(bins[0].signals, 1);
        assert_eq!(bins[14].signals, 2);
        assert_eq!(bins[14].accuracy(), Some(0.4));
        assert_eq!(bins.iter().map(|b| b.signals).sum::<usize>(), 3);
        assert!(accuracy_by_shr(&s, 0.0).is_err());
    }

    #[test]
    fn line_fit_recovers_exact_line() {
        let pts: Vec<_> = (0..5).map(|i| (i as f64 * 50.0, 0.9 + 1e-4 * i as f64 * 50.0)).collect();
        let f = LinearFit::fit(&pts).unwrap();
        assert!((f.slope - 1e-4).abs() < 1e-15);
        assert!((f.intercept - 0.9).abs() < 1e-12);
        assert!(LinearFit::fit(&[(1.0, 1.0), (1.0, 2.0)]).is_none());
        let trends = accuracy_vs_fo(&[score(1, 100.0, None, 9), score(1, 200.0, None, 7)]);
        assert_eq!(trends.len(), 5);
        assert!((trends[0].fit.unwrap().slope + 0.002).abs() < 1e-12);
        assert!(trends[1].fit.is_none());
    }
}
