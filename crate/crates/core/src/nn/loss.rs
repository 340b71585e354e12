use super::{Scalar, Tensor};
use crate::error::{Error, Result};

/// Mean binary cross-entropy of `sigmoid(logits)` against 0/1 `targets`.
///
/// Uses `max(z, 0) − z·t + ln(1 + e^−|z|)`, which never overflows. Returns the
/// loss averaged over every cell and its gradient `(σ(z) − t) / count`.
pub fn bce_with_logits<T: Scalar>(logits: &Tensor<T>, targets: &Tensor<T>) -> Result<(f64, Tensor<T>)> {
    if logits.shape() != targets.shape() {
        return Err(Error::Shape(format!(
            "logits {:?} vs targets {:?}",
            logits.shape(),
            targets.shape()
        )));
    }
    let count = logits.numel().max(1) as f64;
    let inv = T::from_f64(1.0 / count);
    let mut loss = 0.0f64;
    let mut grad = logits.clone();
    for (g, &t) in grad.data_mut().iter_mut().zip(targets.data()) {
        let z = *g;
        let cell = z.max(T::ZERO) - z * t + (-z.abs()).exp().ln_1p();
        loss += cell.to_f64();
        *g = (super::sigmoid(z) - t) * inv;
    }
    Ok((loss / count, grad))
}
