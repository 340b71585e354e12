use super::Scalar;
use crate::error::{Error, Result};

/// Dense `(batch, channels, length)` activation tensor, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor<T> {
    shape: [usize; 3],
    data: Vec<T>,
}

impl<T: Scalar> Tensor<T> {
    pub fn new(shape: [usize; 3], data: Vec<T>) -> Result<Self> {
        let n: usize = shape.iter().product();
        if n != data.len() {
            return Err(Error::Shape(format!(
                "shape {shape:?} holds {n} elements, data has {}",
                data.len()
            )));
        }
        Ok(Tensor { shape, data })
    }

    pub fn zeros(batch: usize, channels: usize, len: usize) -> Self {
        Tensor {
            shape: [batch, channels, len],
            data: vec![T::ZERO; batch * channels * len],
        }
    }

    /// Stacks equal-length single-channel sequences into a batch.
    pub fn from_rows(rows: &[&[T]]) -> Result<Self> {
        let len = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != len) {
            return Err(Error::Shape("rows of a batch must share one length".into()));
        }
        let data = rows.iter().flat_map(|r| r.iter().copied()).collect();
        Tensor::new([rows.len(), 1, len], data)
    }

    pub fn shape(&self) -> [usize; 3] {
        self.shape
    }

    pub fn batch(&self) -> usize {
        self.shape[0]
    }

    pub fn channels(&self) -> usize {
        self.shape[1]
    }

    pub fn len(&self) -> usize {
        self.shape[2]
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn numel(&self) -> usize {
        self.data.len()
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    /// All channels of batch item `b`, `channels × len`.
    pub fn item(&self, b: usize) -> &[T] {
        let n = self.shape[1] * self.shape[2];
        &self.data[b * n..(b + 1) * n]
    }

    pub fn item_mut(&mut self, b: usize) -> &mut [T] {
        let n = self.shape[1] * self.shape[2];
        &mut self.data[b * n..(b + 1) * n]
    }

    /// One `(batch, channel)` row.
    pub fn row(&self, b: usize, c: usize) -> &[T] {
        let l = self.shape[2];
        let start = (b * self.shape[1] + c) * l;
        &self.data[start..start + l]
    }

    pub fn get(&self, b: usize, c: usize, i: usize) -> T {
        self.data[(b * self.shape[1] + c) * self.shape[2] + i]
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Tensor {
            shape: self.shape,
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }

    pub fn cast<U: Scalar>(&self) -> Tensor<U> {
        Tensor {
            shape: self.shape,
            data: self.data.iter().map(|x| U::from_f64(x.to_f64())).collect(),
        }
    }

    pub(crate) fn expect_shape(&self, shape: [usize; 3], what: &str) -> Result<()> {
        if self.shape != shape {
            return Err(Error::Shape(format!(
                "{what}: expected {shape:?}, got {:?}",
                self.shape
            )));
        }
        Ok(())
    }
}

/// Learnable weight or persistent buffer with its gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct Param<T> {
    pub name: String,
    pub shape: Vec<usize>,
    pub value: Vec<T>,
    /// Same length as `value`; untouched for buffers.
    pub grad: Vec<T>,
    /// Buffers (running statistics) are saved but never optimized.
    pub trainable: bool,
}

impl<T: Scalar> Param<T> {
    pub fn new(name: impl Into<String>, shape: Vec<usize>, value: Vec<T>, trainable: bool) -> Self {
        assert_eq!(shape.iter().product::<usize>(), value.len(), "parameter shape");
        Param {
            name: name.into(),
            grad: vec![T::ZERO; value.len()],
            shape,
            value,
            trainable,
        }
    }

    pub fn len(&self) -> usize {
        self.value.len()
    }

    pub fn is_empty(&self) -> bool {
        self.value.is_empty()
    }

    pub fn zero_grad(&mut self) {
        self.grad.iter_mut().for_each(|g| *g = T::ZERO);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape_product_is_checked() {
        assert!(Tensor::<f32>::new([2, 3, 4], vec![0.0; 24]).is_ok());
        assert!(matches!(
            Tensor::<f32>::new([2, 3, 4], vec![0.0; 23]),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn indexing_is_row_major() {
        let t = Tensor::<f64>::new([2, 2, 3], (0..12).map(f64::from).collect()).unwrap();
        assert_eq!(t.get(1, 0, 2), 8.0);
        assert_eq!(t.row(0, 1), &[3.0, 4.0, 5.0]);
        assert_eq!(t.item(1).len(), 6);
    }

    #[test]
    fn rows_must_share_a_length() {
        let a = [1.0f32, 2.0];
        let b = [3.0f32];
        assert!(Tensor::from_rows(&[&a, &b]).is_err());
        let t = Tensor::from_rows(&[&a, &a]).unwrap();
        assert_eq!(t.shape(), [2, 1, 2]);
    }
}
