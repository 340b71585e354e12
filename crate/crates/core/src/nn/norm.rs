use super::{Module, Param, Scalar, Tensor};
use crate::error::{Error, Result};

pub const DEFAULT_BN_MOMENTUM: f64 = 0.1;
pub const DEFAULT_BN_EPS: f64 = 1e-5;

/// Per-channel batch normalization over batch and length.
#[derive(Debug, Clone)]
pub struct BatchNorm1d<T> {
    channels: usize,
    pub momentum: f64,
    pub eps: f64,
    pub gamma: Param<T>,
    pub beta: Param<T>,
    pub running_mean: Param<T>,
    /// Unbiased batch variance, exponentially averaged; always positive.
    pub running_var: Param<T>,
    cache: Option<Cache<T>>,
}

#[derive(Debug, Clone)]
struct Cache<T> {
    x_hat: Tensor<T>,
    inv_std: Vec<T>,
}

impl<T: Scalar> BatchNorm1d<T> {
    pub fn new(channels: usize) -> Self {
        Self::with_hyper(channels, DEFAULT_BN_MOMENTUM, DEFAULT_BN_EPS)
    }

    pub fn with_hyper(channels: usize, momentum: f64, eps: f64) -> Self {
        let fill = |name: &str, v: f64, trainable| {
            Param::new(name, vec![channels], vec![T::from_f64(v); channels], trainable)
        };
        BatchNorm1d {
            channels,
            momentum,
            eps,
            gamma: fill("gamma", 1.0, true),
            beta: fill("beta", 0.0, true),
            running_mean: fill("running_mean", 0.0, false),
            running_var: fill("running_var", 1.0, false),
            cache: None,
        }
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    fn check(&self, x: &Tensor<T>) -> Result<()> {
        if x.channels() != self.channels {
            return Err(Error::Shape(format!(
                "batchnorm expects {} channels, got {}",
                self.channels,
                x.channels()
            )));
        }
        Ok(())
    }

    /// Running variance must stay positive for inference to be defined.
    pub fn validate(&self) -> Result<()> {
        match self.running_var.value.iter().find(|v| !(v.to_f64() > 0.0)) {
            Some(v) => Err(Error::Checkpoint(format!("batchnorm running variance {v} is not positive"))),
            None => Ok(()),
        }
    }

    fn for_each_row(x: &Tensor<T>, c: usize, mut f: impl FnMut(&[T])) {
        for b in 0..x.batch() {
            f(x.row(b, c));
        }
    }
}

impl<T: Scalar> Module<T> for BatchNorm1d<T> {
    fn infer(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        self.check(x)?;
        let mut y = x.clone();
        let len = x.len();
        let (scale, shift): (Vec<T>, Vec<T>) = (0..self.channels)
            .map(|c| {
                let inv = 1.0 / (self.running_var.value[c].to_f64() + self.eps).sqrt();
                let s = self.gamma.value[c].to_f64() * inv;
                let t = self.beta.value[c].to_f64() - s * self.running_mean.value[c].to_f64();
                (T::from_f64(s), T::from_f64(t))
            })
            .unzip();
        for (r, row) in y.data_mut().chunks_exact_mut(len.max(1)).enumerate() {
            let c = r % self.channels;
            for v in row {
                *v = *v * scale[c] + shift[c];
            }
        }
        Ok(y)
    }

    fn forward_train(&mut self, x: &Tensor<T>) -> Result<Tensor<T>> {
        self.check(x)?;
        let n = x.batch() * x.len();
        if n < 2 {
            return Err(Error::Shape(
                "batchnorm training needs at least two values per channel".into(),
            ));
        }
        let len = x.len();
        let mut mean = vec![0.0f64; self.channels];
        let mut var = vec![0.0f64; self.channels];
        for c in 0..self.channels {
            let mut s = 0.0;
            Self::for_each_row(x, c, |row| s += row.iter().map(|v| v.to_f64()).sum::<f64>());
            let m = s / n as f64;
            let mut q = 0.0;
            Self::for_each_row(x, c, |row| {
                q += row.iter().map(|v| (v.to_f64() - m).powi(2)).sum::<f64>()
            });
            mean[c] = m;
            var[c] = q / n as f64;
        }
        let inv_std: Vec<T> = var
            .iter()
            .map(|v| T::from_f64(1.0 / (v + self.eps).sqrt()))
            .collect();
        let mut x_hat = x.clone();
        let mut y = x.clone();
        for (r, (xh, yr)) in x_hat
            .data_mut()
            .chunks_exact_mut(len)
            .zip(y.data_mut().chunks_exact_mut(len))
            .enumerate()
        {
            let c = r % self.channels;
            let (m, inv) = (T::from_f64(mean[c]), inv_std[c]);
            let (g, b) = (self.gamma.value[c], self.beta.value[c]);
            for (h, o) in xh.iter_mut().zip(yr.iter_mut()) {
                *h = (*h - m) * inv;
                *o = g * *h + b;
            }
        }
        let mo = self.momentum;
        let unbias = n as f64 / (n - 1) as f64;
        for c in 0..self.channels {
            let rm = &mut self.running_mean.value[c];
            *rm = T::from_f64((1.0 - mo) * rm.to_f64() + mo * mean[c]);
            let rv = &mut self.running_var.value[c];
            *rv = T::from_f64((1.0 - mo) * rv.to_f64() + mo * var[c] * unbias);
        }
        self.cache = Some(Cache { x_hat, inv_std });
        Ok(y)
    }

    fn backward(&mut self, grad_out: &Tensor<T>, need_input_grad: bool) -> Result<Option<Tensor<T>>> {
        let Cache { x_hat, inv_std } = self
            .cache
            .take()
            .ok_or_else(|| Error::Training("batchnorm backward without a training forward".into()))?;
        grad_out.expect_shape(x_hat.shape(), "batchnorm grad_out")?;
        let len = x_hat.len();
        let n = (x_hat.batch() * len) as f64;
        let mut sum_dy = vec![0.0f64; self.channels];
        let mut sum_dy_xh = vec![0.0f64; self.channels];
        for (r, (g, h)) in grad_out
            .data()
            .chunks_exact(len)
            .zip(x_hat.data().chunks_exact(len))
            .enumerate()
        {
            let c = r % self.channels;
            for (&gv, &hv) in g.iter().zip(h) {
                sum_dy[c] += gv.to_f64();
                sum_dy_xh[c] += gv.to_f64() * hv.to_f64();
            }
        }
        for c in 0..self.channels {
            self.gamma.grad[c] += T::from_f64(sum_dy_xh[c]);
            self.beta.grad[c] += T::from_f64(sum_dy[c]);
        }
        if !need_input_grad {
            return Ok(None);
        }
        let mut gx = x_hat;
        for (r, (gxr, g)) in gx
            .data_mut()
            .chunks_exact_mut(len)
            .zip(grad_out.data().chunks_exact(len))
            .enumerate()
        {
            let c = r % self.channels;
            let k = T::from_f64(self.gamma.value[c].to_f64() * inv_std[c].to_f64() / n);
            let nn = T::from_f64(n);
            let (s1, s2) = (T::from_f64(sum_dy[c]), T::from_f64(sum_dy_xh[c]));
            for (v, &gv) in gxr.iter_mut().zip(g) {
                // v holds x̂ on entry.
                *v = k * (nn * gv - s1 - *v * s2);
            }
        }
        Ok(Some(gx))
    }

    fn params(&self) -> Vec<&Param<T>> {
        vec![&self.gamma, &self.beta, &self.running_mean, &self.running_var]
    }

    fn params_mut(&mut self) -> Vec<&mut Param<T>> {
        vec![
            &mut self.gamma,
            &mut self.beta,
            &mut self.running_mean,
            &mut self.running_var,
        ]
    }

    fn output_len(&self, len: usize) -> Option<usize> {
        Some(len)
    }

    fn clear_cache(&mut self) {
        self.cache = None;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Tensor<f32> {
        let data = (0..3 * 2 * 50)
            .map(|i| ((i * 7919) % 113) as f32 * 0.37 + (i % 2) as f32 * 40.0)
            .collect();
        Tensor::new([3, 2, 50], data).unwrap()
    }

    #[test]
    fn training_output_is_standardized_per_channel() {
        let mut bn = BatchNorm1d::<f32>::new(2);
        let y = bn.forward_train(&sample()).unwrap();
        for c in 0..2 {
            let vals: Vec<f64> = (0..3).flat_map(|b| y.row(b, c).iter().map(|&v| v as f64)).collect();
            let m = vals.iter().sum::<f64>() / vals.len() as f64;
            let v = vals.iter().map(|x| (x - m).powi(2)).sum::<f64>() / vals.len() as f64;
            assert!(m.abs() < 1e-6, "{m}");
            // Epsilon shifts the variance by eps/(var+eps).
            assert!((v - 1.0).abs() < 1e-5, "{v}");
        }
    }

    #[test]
    fn inference_leaves_running_stats_alone() {
        let mut bn = BatchNorm1d::<f32>::new(2);
        bn.forward_train(&sample()).unwrap();
        let before = (bn.running_mean.clone(), bn.running_var.clone());
        let a = bn.infer(&sample()).unwrap();
        let b = bn.infer(&sample()).unwrap();
        assert_eq!(a, b);
        assert_eq!((bn.running_mean.clone(), bn.running_var.clone()), before);
        assert!(bn.validate().is_ok());
    }

    #[test]
    fn running_stats_follow_momentum() {
        let mut bn = BatchNorm1d::<f64>::new(1);
        let x = Tensor::new([1, 1, 4], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        bn.forward_train(&x).unwrap();
        assert!((bn.running_mean.value[0] - 0.25).abs() < 1e-12);
        // Unbiased variance of 1..4 is 5/3.
        assert!((bn.running_var.value[0] - (0.9 + 0.1 * 5.0 / 3.0)).abs() < 1e-12);
    }
}
