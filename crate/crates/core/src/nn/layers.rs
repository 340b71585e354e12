//! Parameter-free layers: ReLU, sigmoid, pair max-pooling and dropout.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Module, Scalar, Tensor};
use crate::error::{Error, Result};

fn missing(layer: &str) -> Error {
    Error::Training(format!("{layer} backward without a training forward"))
}

#[derive(Debug, Clone, Default)]
pub struct Relu {
    mask: Option<Vec<bool>>,
}

impl<T: Scalar> Module<T> for Relu {
    fn infer(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        Ok(x.map(|v| v.max(T::ZERO)))
    }

    fn forward_train(&mut self, x: &Tensor<T>) -> Result<Tensor<T>> {
        self.mask = Some(x.data().iter().map(|&v| v > T::ZERO).collect());
        self.infer(x)
    }

    fn backward(&mut self, grad_out: &Tensor<T>, need_input_grad: bool) -> Result<Option<Tensor<T>>> {
        let mask = self.mask.take().ok_or_else(|| missing("relu"))?;
        if mask.len() != grad_out.numel() {
            return Err(Error::Shape("relu grad_out does not match the forward input".into()));
        }
        if !need_input_grad {
            return Ok(None);
        }
        let mut g = grad_out.clone();
        for (v, &keep) in g.data_mut().iter_mut().zip(&mask) {
            if !keep {
                *v = T::ZERO;
            }
        }
        Ok(Some(g))
    }

    fn output_len(&self, len: usize) -> Option<usize> {
        Some(len)
    }

    fn clear_cache(&mut self) {
        self.mask = None;
    }
}

/// Logistic output layer.
#[derive(Debug, Clone, Default)]
pub struct Sigmoid<T> {
    output: Option<Tensor<T>>,
}

pub fn sigmoid<T: Scalar>(z: T) -> T {
    // Both branches only exponentiate non-positive numbers.
    if z >= T::ZERO {
        T::ONE / (T::ONE + (-z).exp())
    } else {
        let e = z.exp();
        e / (T::ONE + e)
    }
}

impl<T: Scalar> Module<T> for Sigmoid<T> {
    fn infer(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        Ok(x.map(sigmoid))
    }

    fn forward_train(&mut self, x: &Tensor<T>) -> Result<Tensor<T>> {
        let y = self.infer(x)?;
        self.output = Some(y.clone());
        Ok(y)
    }

    fn backward(&mut self, grad_out: &Tensor<T>, need_input_grad: bool) -> Result<Option<Tensor<T>>> {
        let y = self.output.take().ok_or_else(|| missing("sigmoid"))?;
        grad_out.expect_shape(y.shape(), "sigmoid grad_out")?;
        if !need_input_grad {
            return Ok(None);
        }
        let mut g = grad_out.clone();
        for (v, &s) in g.data_mut().iter_mut().zip(y.data()) {
            *v *= s * (T::ONE - s);
        }
        Ok(Some(g))
    }

    fn output_len(&self, len: usize) -> Option<usize> {
        Some(len)
    }

    fn clear_cache(&mut self) {
        self.output = None;
    }
}

/// Max over non-overlapping pairs; a trailing odd sample is dropped.
#[derive(Debug, Clone, Default)]
pub struct MaxPool2 {
    /// Input shape and, per output, whether the second of the pair won.
    cache: Option<([usize; 3], Vec<bool>)>,
}

impl MaxPool2 {
    fn pool<T: Scalar>(x: &Tensor<T>, mut record: Option<&mut Vec<bool>>) -> Result<Tensor<T>> {
        let (len, out_len) = (x.len(), x.len() / 2);
        let mut y = Tensor::zeros(x.batch(), x.channels(), out_len);
        if out_len == 0 {
            return Ok(y);
        }
        for (src, dst) in x
            .data()
            .chunks_exact(len)
            .zip(y.data_mut().chunks_exact_mut(out_len))
        {
            for (i, d) in dst.iter_mut().enumerate() {
                let (a, b) = (src[2 * i], src[2 * i + 1]);
                // Ties go to the first element.
                let second = b > a;
                *d = if second { b } else { a };
                if let Some(r) = record.as_mut() {
                    r.push(second);
                }
            }
        }
        Ok(y)
    }
}

impl<T: Scalar> Module<T> for MaxPool2 {
    fn infer(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        Self::pool(x, None)
    }

    fn forward_train(&mut self, x: &Tensor<T>) -> Result<Tensor<T>> {
        let mut arg = Vec::with_capacity(x.numel() / 2);
        let y = Self::pool(x, Some(&mut arg))?;
        self.cache = Some((x.shape(), arg));
        Ok(y)
    }

    fn backward(&mut self, grad_out: &Tensor<T>, need_input_grad: bool) -> Result<Option<Tensor<T>>> {
        let (shape, arg) = self.cache.take().ok_or_else(|| missing("maxpool"))?;
        grad_out.expect_shape([shape[0], shape[1], shape[2] / 2], "maxpool grad_out")?;
        if !need_input_grad {
            return Ok(None);
        }
        let (len, out_len) = (shape[2], shape[2] / 2);
        let mut gx = Tensor::zeros(shape[0], shape[1], len);
        if out_len == 0 {
            return Ok(Some(gx));
        }
        for (r, (dst, src)) in gx
            .data_mut()
            .chunks_exact_mut(len)
            .zip(grad_out.data().chunks_exact(out_len))
            .enumerate()
        {
            for (i, &g) in src.iter().enumerate() {
                dst[2 * i + arg[r * out_len + i] as usize] = g;
            }
        }
        Ok(Some(gx))
    }

    fn output_len(&self, len: usize) -> Option<usize> {
        Some(len / 2)
    }

    fn clear_cache(&mut self) {
        self.cache = None;
    }
}

/// Inverted dropout: kept units are scaled by 1/(1−p) during training.
#[derive(Debug, Clone)]
pub struct Dropout<T> {
    p: f64,
    rng: ChaCha8Rng,
    mask: Option<Vec<T>>,
}

impl<T: Scalar> Dropout<T> {
    pub fn new(p: f64, seed: u64) -> Result<Self> {
        if !(0.0..1.0).contains(&p) {
            return Err(Error::Architecture(format!("dropout rate {p} is outside [0, 1)")));
        }
        Ok(Dropout {
            p,
            rng: ChaCha8Rng::seed_from_u64(seed),
            mask: None,
        })
    }

    pub fn rate(&self) -> f64 {
        self.p
    }

    /// Restarts the mask sequence.
    pub fn reseed(&mut self, seed: u64) {
        self.rng = ChaCha8Rng::seed_from_u64(seed);
    }
}

impl<T: Scalar> Module<T> for Dropout<T> {
    fn infer(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        Ok(x.clone())
    }

    fn forward_train(&mut self, x: &Tensor<T>) -> Result<Tensor<T>> {
        let scale = T::from_f64(1.0 / (1.0 - self.p));
        let mask: Vec<T> = if self.p == 0.0 {
            vec![T::ONE; x.numel()]
        } else {
            (0..x.numel())
                .map(|_| {
                    if self.rng.random::<f64>() < self.p {
                        T::ZERO
                    } else {
                        scale
                    }
                })
                .collect()
        };
        let mut y = x.clone();
        for (v, &m) in y.data_mut().iter_mut().zip(&mask) {
            *v *= m;
        }
        self.mask = Some(mask);
        Ok(y)
    }

    fn backward(&mut self, grad_out: &Tensor<T>, need_input_grad: bool) -> Result<Option<Tensor<T>>> {
        let mask = self.mask.take().ok_or_else(|| missing("dropout"))?;
        if mask.len() != grad_out.numel() {
            return Err(Error::Shape("dropout grad_out does not match the forward input".into()));
        }
        if !need_input_grad {
            return Ok(None);
        }
        let mut g = grad_out.clone();
        for (v, &m) in g.data_mut().iter_mut().zip(&mask) {
            *v *= m;
        }
        Ok(Some(g))
    }

    fn output_len(&self, len: usize) -> Option<usize> {
        Some(len)
    }

    fn clear_cache(&mut self) {
        self.mask = None;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn maxpool_floor_semantics() {
        let x = Tensor::new([1, 1, 5], vec![3.0f64, 1.0, 4.0, 1.0, 5.0]).unwrap();
        let mut p = MaxPool2::default();
        let y = p.forward_train(&x).unwrap();
        assert_eq!(y.data(), &[3.0, 4.0]);
        let g = Module::<f64>::backward(&mut p, &Tensor::new([1, 1, 2], vec![1.0, 2.0]).unwrap(), true)
            .unwrap()
            .unwrap();
        assert_eq!(g.data(), &[1.0, 0.0, 2.0, 0.0, 0.0]);
    }

    #[test]
    fn dropout_zero_rate_is_identity() {
        let x = Tensor::new([2, 1, 3], vec![1.0f32, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        let mut d = Dropout::new(0.0, 9).unwrap();
        assert_eq!(d.forward_train(&x).unwrap(), x);
        assert_eq!(d.infer(&x).unwrap(), x);
    }

    #[test]
    fn dropout_scales_kept_units_and_is_seeded() {
        let x = Tensor::new([1, 1, 10_000], vec![1.0f64; 10_000]).unwrap();
        let mut a = Dropout::new(0.2, 5).unwrap();
        let mut b = Dropout::new(0.2, 5).unwrap();
        let ya = a.forward_train(&x).unwrap();
        assert_eq!(ya, b.forward_train(&x).unwrap());
        assert!(ya.data().iter().all(|&v| v == 0.0 || (v - 1.25).abs() < 1e-15));
        let dropped = ya.data().iter().filter(|&&v| v == 0.0).count() as f64 / 1e4;
        assert!((dropped - 0.2).abs() < 0.02, "{dropped}");
        assert!(Dropout::<f32>::new(1.0, 0).is_err());
    }

    #[test]
    fn sigmoid_is_stable_at_extremes() {
        assert_eq!(sigmoid(800.0f64), 1.0);
        assert_eq!(sigmoid(-800.0f64), 0.0);
        assert!((sigmoid(0.0f32) - 0.5).abs() < 1e-7);
    }

    #[test]
    fn relu_backward_masks_negative_inputs() {
        let x = Tensor::new([1, 1, 4], vec![-1.0f64, 2.0, -3.0, 4.0]).unwrap();
        let mut r = Relu::default();
        assert_eq!(r.forward_train(&x).unwrap().data(), &[0.0, 2.0, 0.0, 4.0]);
        let g = r
            .backward(&Tensor::new([1, 1, 4], vec![1.0; 4]).unwrap(), true)
            .unwrap()
            .unwrap();
        assert_eq!(g.data(), &[0.0, 1.0, 0.0, 1.0]);
    }
}
