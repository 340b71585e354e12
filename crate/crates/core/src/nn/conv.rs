use rand::Rng;

use super::scalar::{gemm, MatRef};
use super::{Module, Param, Scalar, Tensor};
use crate::error::{Error, Result};

/// Valid (unpadded), stride-1 one-dimensional cross-correlation.
#[derive(Debug, Clone)]
pub struct Conv1d<T> {
    in_channels: usize,
    out_channels: usize,
    kernel: usize,
    /// `out × in × kernel`.
    pub weight: Param<T>,
    pub bias: Param<T>,
    input: Option<Tensor<T>>,
}

/// Gradients of one convolution with respect to its three inputs.
#[derive(Debug, Clone)]
pub struct ConvGrads<T> {
    pub input: Option<Tensor<T>>,
    pub weight: Vec<T>,
    pub bias: Vec<T>,
}

impl<T: Scalar> Conv1d<T> {
    /// Weights and biases uniform in ±1/√(in·kernel).
    pub fn new(in_channels: usize, out_channels: usize, kernel: usize, rng: &mut impl Rng) -> Self {
        let bound = 1.0 / ((in_channels * kernel) as f64).sqrt();
        let mut draw = |n: usize| -> Vec<T> {
            (0..n)
                .map(|_| T::from_f64(rng.random_range(-bound..bound)))
                .collect()
        };
        let w = draw(out_channels * in_channels * kernel);
        let b = draw(out_channels);
        Self::from_values(in_channels, out_channels, kernel, w, b).expect("consistent sizes")
    }

    pub fn from_values(
        in_channels: usize,
        out_channels: usize,
        kernel: usize,
        weight: Vec<T>,
        bias: Vec<T>,
    ) -> Result<Self> {
        if in_channels == 0 || out_channels == 0 || kernel == 0 {
            return Err(Error::Architecture(format!(
                "conv1d needs positive sizes, got {in_channels}→{out_channels}, kernel {kernel}"
            )));
        }
        if weight.len() != out_channels * in_channels * kernel || bias.len() != out_channels {
            return Err(Error::Shape(format!(
                "conv1d {in_channels}→{out_channels} k={kernel}: got {} weights and {} biases",
                weight.len(),
                bias.len()
            )));
        }
        Ok(Conv1d {
            in_channels,
            out_channels,
            kernel,
            weight: Param::new("weight", vec![out_channels, in_channels, kernel], weight, true),
            bias: Param::new("bias", vec![out_channels], bias, true),
            input: None,
        })
    }

    pub fn in_channels(&self) -> usize {
        self.in_channels
    }

    pub fn out_channels(&self) -> usize {
        self.out_channels
    }

    pub fn kernel(&self) -> usize {
        self.kernel
    }

    fn check_input(&self, x: &Tensor<T>) -> Result<usize> {
        if x.channels() != self.in_channels {
            return Err(Error::Shape(format!(
                "conv1d expects {} input channels, got {}",
                self.in_channels,
                x.channels()
            )));
        }
        if x.len() < self.kernel {
            return Err(Error::Shape(format!(
                "conv1d input length {} is shorter than the kernel ({})",
                x.len(),
                self.kernel
            )));
        }
        Ok(x.len() - self.kernel + 1)
    }

    /// Writes the `(in·kernel) × out_len` patch matrix of one item into `col`.
    fn im2col(&self, item: &[T], len: usize, out_len: usize, col: &mut [T]) {
        let k = self.kernel;
        for c in 0..self.in_channels {
            for j in 0..k {
                let src = &item[c * len + j..c * len + j + out_len];
                col[(c * k + j) * out_len..(c * k + j + 1) * out_len].copy_from_slice(src);
            }
        }
    }

    /// Borrowed patch matrix: 1-wide kernels use the item itself.
    fn patches<'a>(&self, item: &'a [T], len: usize, out_len: usize, buf: &'a mut Vec<T>) -> &'a [T] {
        if self.kernel == 1 {
            item
        } else {
            buf.resize(self.in_channels * self.kernel * out_len, T::ZERO);
            self.im2col(item, len, out_len, buf);
            buf
        }
    }

    /// Gradients of `sum(grad_out · conv(x))` for the given input.
    pub fn gradients(&self, x: &Tensor<T>, grad_out: &Tensor<T>, need_input: bool) -> Result<ConvGrads<T>> {
        let out_len = self.check_input(x)?;
        grad_out.expect_shape([x.batch(), self.out_channels, out_len], "conv1d grad_out")?;
        let (len, ck) = (x.len(), self.in_channels * self.kernel);
        let mut gw = vec![T::ZERO; self.weight.len()];
        let mut gb = vec![T::ZERO; self.out_channels];
        let mut gx = need_input.then(|| Tensor::zeros(x.batch(), self.in_channels, len));
        let mut buf = Vec::new();
        let mut gcol = vec![T::ZERO; if need_input { ck * out_len } else { 0 }];
        for b in 0..x.batch() {
            let gy = grad_out.item(b);
            for (o, g) in gb.iter_mut().enumerate() {
                *g += gy[o * out_len..(o + 1) * out_len].iter().copied().sum::<T>();
            }
            let col = self.patches(x.item(b), len, out_len, &mut buf);
            gemm(
                self.out_channels,
                out_len,
                ck,
                T::ONE,
                MatRef::rows(gy, out_len),
                MatRef::transposed(col, out_len),
                T::ONE,
                &mut gw,
            );
            if let Some(gx) = gx.as_mut() {
                gemm(
                    ck,
                    self.out_channels,
                    out_len,
                    T::ONE,
                    MatRef::transposed(&self.weight.value, ck),
                    MatRef::rows(gy, out_len),
                    T::ZERO,
                    &mut gcol,
                );
                let gi = gx.item_mut(b);
                for c in 0..self.in_channels {
                    for j in 0..self.kernel {
                        let src = &gcol[(c * self.kernel + j) * out_len..][..out_len];
                        let dst = &mut gi[c * len + j..c * len + j + out_len];
                        for (d, &s) in dst.iter_mut().zip(src) {
                            *d += s;
                        }
                    }
                }
            }
        }
        Ok(ConvGrads {
            input: gx,
            weight: gw,
            bias: gb,
        })
    }
}

impl<T: Scalar> Module<T> for Conv1d<T> {
    fn infer(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        let out_len = self.check_input(x)?;
        let (len, ck) = (x.len(), self.in_channels * self.kernel);
        let mut y = Tensor::zeros(x.batch(), self.out_channels, out_len);
        let mut buf = Vec::new();
        for b in 0..x.batch() {
            let col = self.patches(x.item(b), len, out_len, &mut buf);
            let yb = y.item_mut(b);
            for (o, row) in yb.chunks_exact_mut(out_len).enumerate() {
                row.fill(self.bias.value[o]);
            }
            gemm(
                self.out_channels,
                ck,
                out_len,
                T::ONE,
                MatRef::rows(&self.weight.value, ck),
                MatRef::rows(col, out_len),
                T::ONE,
                yb,
            );
        }
        Ok(y)
    }

    fn forward_train(&mut self, x: &Tensor<T>) -> Result<Tensor<T>> {
        let y = self.infer(x)?;
        self.input = Some(x.clone());
        Ok(y)
    }

    fn backward(&mut self, grad_out: &Tensor<T>, need_input_grad: bool) -> Result<Option<Tensor<T>>> {
        let x = self
            .input
            .take()
            .ok_or_else(|| Error::Training("conv1d backward without a training forward".into()))?;
        let g = self.gradients(&x, grad_out, need_input_grad)?;
        for (a, b) in self.weight.grad.iter_mut().zip(&g.weight) {
            *a += *b;
        }
        for (a, b) in self.bias.grad.iter_mut().zip(&g.bias) {
            *a += *b;
        }
        Ok(g.input)
    }

    fn params(&self) -> Vec<&Param<T>> {
        vec![&self.weight, &self.bias]
    }

    fn params_mut(&mut self) -> Vec<&mut Param<T>> {
        vec![&mut self.weight, &mut self.bias]
    }

    fn output_len(&self, len: usize) -> Option<usize> {
        (len >= self.kernel).then(|| len - self.kernel + 1)
    }

    fn clear_cache(&mut self) {
        self.input = None;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_kernel_is_identity() {
        let c = Conv1d::<f64>::from_values(1, 1, 1, vec![1.0], vec![0.0]).unwrap();
        let x = Tensor::new([1, 1, 4], vec![1.0, -2.0, 3.5, 0.0]).unwrap();
        assert_eq!(c.infer(&x).unwrap(), x);
    }

    #[test]
    fn moving_pair_sum() {
        let c = Conv1d::<f64>::from_values(1, 1, 2, vec![1.0, 1.0], vec![0.0]).unwrap();
        let x = Tensor::new([1, 1, 3], vec![1.0, 2.0, 3.0]).unwrap();
        assert_eq!(c.infer(&x).unwrap().data(), &[3.0, 5.0]);
    }

    #[test]
    fn gemm_path_matches_direct_loops() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        for _ in 0..20 {
            let (cin, cout, k) = (rng.random_range(1..5), rng.random_range(1..5), rng.random_range(1..7));
            let (batch, len) = (rng.random_range(1..4), k + rng.random_range(0..20));
            let c = Conv1d::<f64>::new(cin, cout, k, &mut rng);
            let x = Tensor::new([batch, cin, len], (0..batch * cin * len).map(|_| rng.random_range(-1.0..1.0)).collect())
                .unwrap();
            let y = c.infer(&x).unwrap();
            let (w, bias) = (c.params()[0].value.clone(), c.params()[1].value.clone());
            for b in 0..batch {
                for o in 0..cout {
                    for t in 0..len - k + 1 {
                        let mut acc = bias[o];
                        for i in 0..cin {
                            for j in 0..k {
                                acc += w[(o * cin + i) * k + j] * x.get(b, i, t + j);
                            }
                        }
                        assert!((y.get(b, o, t) - acc).abs() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn shape_errors() {
        let c = Conv1d::<f32>::from_values(2, 1, 3, vec![0.0; 6], vec![0.0]).unwrap();
        assert!(matches!(c.infer(&Tensor::zeros(1, 1, 8)), Err(Error::Shape(_))));
        assert!(matches!(c.infer(&Tensor::zeros(1, 2, 2)), Err(Error::Shape(_))));
        assert!(Conv1d::<f32>::from_values(2, 1, 3, vec![0.0; 5], vec![0.0]).is_err());
    }

    #[test]
    fn bias_gradient_sums_grad_out() {
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(1);
        let c = Conv1d::<f64>::new(2, 3, 4, &mut rng);
        let x = Tensor::new([2, 2, 9], (0..36).map(|i| (i as f64).sin()).collect()).unwrap();
        let gy = Tensor::new([2, 3, 6], (0..36).map(|i| (i as f64 * 0.3).cos()).collect()).unwrap();
        let g = c.gradients(&x, &gy, true).unwrap();
        for o in 0..3 {
            let expect: f64 = (0..2).flat_map(|b| gy.row(b, o).to_vec()).sum();
            assert!((g.bias[o] - expect).abs() < 1e-12);
        }
        let zero = c.gradients(&x, &Tensor::zeros(2, 3, 6), true).unwrap();
        assert!(zero.weight.iter().chain(&zero.bias).all(|&v| v == 0.0));
        assert!(zero.input.unwrap().data().iter().all(|&v| v == 0.0));
    }
}
