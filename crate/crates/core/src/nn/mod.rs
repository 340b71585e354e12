//! Minimal differentiable building blocks for one-dimensional CNNs.
//!
//! Activations are `(batch, channels, length)` tensors. Every layer offers a
//! pure [`Module::infer`] and a caching [`Module::forward_train`] whose
//! [`Module::backward`] accumulates parameter gradients.

mod adam;
mod checkpoint;
mod conv;
pub mod gradcheck;
mod layers;
mod loss;
mod norm;
mod scalar;
mod tensor;

pub use adam::{AdamConfig, AdamState};
pub use checkpoint::{Checkpoint, TensorInfo};
pub use conv::{Conv1d, ConvGrads};
pub use layers::{sigmoid, Dropout, MaxPool2, Relu, Sigmoid};
pub use loss::bce_with_logits;
pub use norm::{BatchNorm1d, DEFAULT_BN_EPS, DEFAULT_BN_MOMENTUM};
pub use scalar::Scalar;
pub use tensor::{Param, Tensor};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Infer,
}

pub trait Module<T: Scalar> {
    /// Inference-mode forward pass; never mutates the layer.
    fn infer(&self, x: &Tensor<T>) -> Result<Tensor<T>>;

    /// Training-mode forward pass; caches what `backward` needs.
    fn forward_train(&mut self, x: &Tensor<T>) -> Result<Tensor<T>>;

    /// Consumes the cache of the last training forward, adds parameter
    /// gradients and optionally returns the input gradient.
    fn backward(&mut self, grad_out: &Tensor<T>, need_input_grad: bool) -> Result<Option<Tensor<T>>>;

    /// Weights and buffers in checkpoint order.
    fn params(&self) -> Vec<&Param<T>> {
        Vec::new()
    }

    fn params_mut(&mut self) -> Vec<&mut Param<T>> {
        Vec::new()
    }

    /// Output length for input length `len`, or `None` if too short.
    fn output_len(&self, len: usize) -> Option<usize>;

    fn clear_cache(&mut self) {}

    fn forward(&mut self, x: &Tensor<T>, mode: Mode) -> Result<Tensor<T>> {
        match mode {
            Mode::Train => self.forward_train(x),
            Mode::Infer => self.infer(x),
        }
    }
}

#[derive(Debug, Clone)]
pub enum Layer<T> {
    Conv1d(Conv1d<T>),
    BatchNorm(BatchNorm1d<T>),
    Relu(Relu),
    MaxPool2(MaxPool2),
    Dropout(Dropout<T>),
    Sigmoid(Sigmoid<T>),
}

macro_rules! dispatch {
    ($self:expr, $l:ident => $body:expr) => {
        match $self {
            Layer::Conv1d($l) => $body,
            Layer::BatchNorm($l) => $body,
            Layer::Relu($l) => $body,
            Layer::MaxPool2($l) => $body,
            Layer::Dropout($l) => $body,
            Layer::Sigmoid($l) => $body,
        }
    };
}

impl<T: Scalar> Module<T> for Layer<T> {
    fn infer(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        dispatch!(self, l => l.infer(x))
    }

    fn forward_train(&mut self, x: &Tensor<T>) -> Result<Tensor<T>> {
        dispatch!(self, l => l.forward_train(x))
    }

    fn backward(&mut self, g: &Tensor<T>, need: bool) -> Result<Option<Tensor<T>>> {
        dispatch!(self, l => l.backward(g, need))
    }

    fn params(&self) -> Vec<&Param<T>> {
        dispatch!(self, l => l.params())
    }

    fn params_mut(&mut self) -> Vec<&mut Param<T>> {
        dispatch!(self, l => l.params_mut())
    }

    fn output_len(&self, len: usize) -> Option<usize> {
        dispatch!(self, l => Module::<T>::output_len(l, len))
    }

    fn clear_cache(&mut self) {
        dispatch!(self, l => Module::<T>::clear_cache(l))
    }
}

/// Layers applied in order.
#[derive(Debug, Clone, Default)]
pub struct Sequential<T> {
    pub layers: Vec<Layer<T>>,
}

impl<T: Scalar> Sequential<T> {
    pub fn new(layers: Vec<Layer<T>>) -> Self {
        Sequential { layers }
    }

    pub fn zero_grad(&mut self) {
        for p in self.params_mut() {
            p.zero_grad();
        }
    }

    /// Trainable weights (buffers excluded) in checkpoint order.
    pub fn trainable_count(&self) -> usize {
        self.params().iter().filter(|p| p.trainable).map(|p| p.len()).sum()
    }

    /// Replaces every batch-norm running statistic with the plain average of
    /// the batch statistics seen over `batches`, leaving weights untouched.
    ///
    /// Returns the number of batches used; with none, nothing changes.
    pub fn recalibrate_batch_norm<I>(&mut self, batches: I) -> Result<usize>
    where
        I: IntoIterator<Item = Result<Tensor<T>>>,
    {
        let saved: Vec<f64> = self.batch_norms().map(|bn| bn.momentum).collect();
        let mut used = 0;
        let outcome = batches.into_iter().try_for_each(|x| {
            let x = x?;
            // Momentum 1/(k+1) turns the exponential average into a cumulative one.
            let mo = 1.0 / (used + 1) as f64;
            self.batch_norms().for_each(|bn| bn.momentum = mo);
            let y = self.forward_train(&x);
            self.clear_cache();
            used += 1;
            y.map(|_| ())
        });
        for (bn, mo) in self.batch_norms().zip(saved) {
            bn.momentum = mo;
        }
        outcome.map(|()| used)
    }

    fn batch_norms(&mut self) -> impl Iterator<Item = &mut BatchNorm1d<T>> {
        self.layers.iter_mut().filter_map(|l| match l {
            Layer::BatchNorm(bn) => Some(bn),
            _ => None,
        })
    }
}

impl<T: Scalar> Module<T> for Sequential<T> {
    fn infer(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        let mut h = x.clone();
        for l in &self.layers {
            h = l.infer(&h)?;
        }
        Ok(h)
    }

    fn forward_train(&mut self, x: &Tensor<T>) -> Result<Tensor<T>> {
        let mut h = x.clone();
        for l in &mut self.layers {
            h = l.forward_train(&h)?;
        }
        Ok(h)
    }

    fn backward(&mut self, grad_out: &Tensor<T>, need_input_grad: bool) -> Result<Option<Tensor<T>>> {
        let mut g = grad_out.clone();
        let n = self.layers.len();
        for (i, l) in self.layers.iter_mut().enumerate().rev() {
            let need = i > 0 || need_input_grad;
            match l.backward(&g, need)? {
                Some(next) => g = next,
                None if i == 0 => return Ok(None),
                None => {
                    return Err(Error::Training(format!(
                        "layer {i} of {n} returned no input gradient"
                    )))
                }
            }
        }
        Ok(Some(g))
    }

    fn params(&self) -> Vec<&Param<T>> {
        self.layers.iter().flat_map(|l| l.params()).collect()
    }

    fn params_mut(&mut self) -> Vec<&mut Param<T>> {
        self.layers.iter_mut().flat_map(|l| l.params_mut()).collect()
    }

    fn output_len(&self, len: usize) -> Option<usize> {
        self.layers
            .iter()
            .try_fold(len, |n, l| l.output_len(n).filter(|&m| m > 0))
    }

    fn clear_cache(&mut self) {
        for l in &mut self.layers {
            l.clear_cache();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recalibration_averages_batch_statistics() {
        let mut net = Sequential::new(vec![Layer::BatchNorm(BatchNorm1d::<f64>::new(1))]);
        let a = Tensor::new([1, 1, 4], vec![0.0, 2.0, 4.0, 6.0]).unwrap();
        let b = Tensor::new([1, 1, 3], vec![10.0, 11.0, 12.0]).unwrap();
        let used = net.recalibrate_batch_norm([Ok(a), Ok(b)]).unwrap();
        assert_eq!(used, 2);
        let Layer::BatchNorm(bn) = &net.layers[0] else { unreachable!() };
        // Means 3 and 11; unbiased variances 20/3 and 1.
        assert!((bn.running_mean.value[0] - 7.0).abs() < 1e-12);
        assert!((bn.running_var.value[0] - (20.0 / 3.0 + 1.0) / 2.0).abs() < 1e-12);
        assert_eq!(bn.momentum, DEFAULT_BN_MOMENTUM);
        assert_eq!((bn.gamma.value[0], bn.beta.value[0]), (1.0, 0.0));

        let before = bn.running_mean.value.clone();
        assert_eq!(net.recalibrate_batch_norm(std::iter::empty()).unwrap(), 0);
        let Layer::BatchNorm(bn) = &net.layers[0] else { unreachable!() };
        assert_eq!(bn.running_mean.value, before);
    }
}
