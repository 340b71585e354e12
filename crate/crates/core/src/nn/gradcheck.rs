//! Central finite-difference gradient checks in double precision.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{bce_with_logits, Module, Tensor};
use crate::error::Result;

/// Outcome of comparing analytic and numeric gradients.
#[derive(Debug, Clone, PartialEq)]
pub struct GradCheck {
    /// Largest `|analytic − numeric| / max(|analytic|, |numeric|)` seen.
    pub max_rel_error: f64,
    /// Number of scalar gradients compared.
    pub checked: usize,
    /// Label of the worst entry, e.g. `input[17]` or `param 0 (weight)[3]`.
    pub worst: String,
}

/// Denominator floor; gradients this small count as absolute errors.
const REL_FLOOR: f64 = 1e-8;

impl GradCheck {
    fn new() -> Self {
        GradCheck {
            max_rel_error: 0.0,
            checked: 0,
            worst: String::new(),
        }
    }

    fn record(&mut self, analytic: f64, numeric: f64, label: impl FnOnce() -> String) {
        let denom = analytic.abs().max(numeric.abs()).max(REL_FLOOR);
        let rel = (analytic - numeric).abs() / denom;
        self.checked += 1;
        if rel > self.max_rel_error || !rel.is_finite() {
            self.max_rel_error = if rel.is_finite() { rel } else { f64::INFINITY };
            self.worst = label();
        }
    }
}

fn projected<M: Module<f64>>(m: &mut M, x: &Tensor<f64>, w: &[f64]) -> Result<f64> {
    let y = m.forward_train(x)?;
    m.clear_cache();
    Ok(y.data().iter().zip(w).map(|(a, b)| a * b).sum())
}

/// Checks input and parameter gradients of `module` at `x`.
///
/// The scalar objective is a fixed random projection `Σ w·module(x)`, which
/// exercises every output; `step` is the central-difference half width.
pub fn check_module<M: Module<f64>>(module: &mut M, x: &Tensor<f64>, step: f64, seed: u64) -> Result<GradCheck> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let y = module.forward_train(x)?;
    let w: Vec<f64> = (0..y.numel()).map(|_| rng.random_range(-1.0..1.0)).collect();
    for p in module.params_mut() {
        p.zero_grad();
    }
    let gy = Tensor::new(y.shape(), w.clone())?;
    let gx = module.backward(&gy, true)?.expect("input gradient requested");
    let analytic_params: Vec<Vec<f64>> = module.params().iter().map(|p| p.grad.clone()).collect();

    let mut report = GradCheck::new();
    let mut xp = x.clone();
    for i in 0..x.numel() {
        let orig = xp.data()[i];
        xp.data_mut()[i] = orig + step;
        let lp = projected(module, &xp, &w)?;
        xp.data_mut()[i] = orig - step;
        let lm = projected(module, &xp, &w)?;
        xp.data_mut()[i] = orig;
        report.record(gx.data()[i], (lp - lm) / (2.0 * step), || format!("input[{i}]"));
    }

    let n_params = module.params().len();
    for k in 0..n_params {
        let (trainable, len, name) = {
            let p = &module.params()[k];
            (p.trainable, p.len(), p.name.clone())
        };
        if !trainable {
            continue;
        }
        for i in 0..len {
            let orig = module.params_mut()[k].value[i];
            module.params_mut()[k].value[i] = orig + step;
            let lp = projected(module, x, &w)?;
            module.params_mut()[k].value[i] = orig - step;
            let lm = projected(module, x, &w)?;
            module.params_mut()[k].value[i] = orig;
            report.record(analytic_params[k][i], (lp - lm) / (2.0 * step), || {
                format!("param {k} ({name})[{i}]")
            });
        }
    }
    Ok(report)
}

/// Checks the logit gradient of [`bce_with_logits`].
pub fn check_bce(logits: &Tensor<f64>, targets: &Tensor<f64>, step: f64) -> Result<GradCheck> {
    let (_, grad) = bce_with_logits(logits, targets)?;
    let mut report = GradCheck::new();
    let mut z = logits.clone();
    for i in 0..z.numel() {
        let orig = z.data()[i];
        z.data_mut()[i] = orig + step;
        let (lp, _) = bce_with_logits(&z, targets)?;
        z.data_mut()[i] = orig - step;
        let (lm, _) = bce_with_logits(&z, targets)?;
        z.data_mut()[i] = orig;
        report.record(grad.data()[i], (lp - lm) / (2.0 * step), || format!("logit[{i}]"));
    }
    Ok(report)
}
