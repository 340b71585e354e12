use serde::{Deserialize, Serialize};

use super::{Param, Scalar};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 2e-4,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Bias-corrected Adam moments for an ordered list of trainable parameters.
#[derive(Debug, Clone)]
pub struct AdamState<T> {
    pub config: AdamConfig,
    pub step: u64,
    m: Vec<Vec<T>>,
    v: Vec<Vec<T>>,
}

impl<T: Scalar> AdamState<T> {
    pub fn new(config: AdamConfig) -> Self {
        AdamState {
            config,
            step: 0,
            m: Vec::new(),
            v: Vec::new(),
        }
    }

    /// Applies one update to every trainable parameter, in order.
    ///
    /// Buffers are skipped. The first call fixes the parameter layout.
    pub fn step(&mut self, params: &mut [&mut Param<T>]) -> Result<()> {
        let sizes: Vec<usize> = params.iter().filter(|p| p.trainable).map(|p| p.len()).collect();
        if self.step == 0 && self.m.is_empty() {
            self.m = sizes.iter().map(|&n| vec![T::ZERO; n]).collect();
            self.v = self.m.clone();
        }
        if sizes.len() != self.m.len() || sizes.iter().zip(&self.m).any(|(&n, m)| n != m.len()) {
            return Err(Error::Shape("adam moments do not match the parameter list".into()));
        }
        self.step += 1;
        let c = &self.config;
        let t = self.step as i32;
        let bc1 = 1.0 - c.beta1.powi(t);
        let bc2 = 1.0 - c.beta2.powi(t);
        let (b1, b2) = (T::from_f64(c.beta1), T::from_f64(c.beta2));
        let (ob1, ob2) = (T::from_f64(1.0 - c.beta1), T::from_f64(1.0 - c.beta2));
        let (lr, eps) = (T::from_f64(c.lr), T::from_f64(c.eps));
        let (ibc1, ibc2) = (T::from_f64(1.0 / bc1), T::from_f64(1.0 / bc2));
        for (p, (m, v)) in params
            .iter_mut()
            .filter(|p| p.trainable)
            .zip(self.m.iter_mut().zip(self.v.iter_mut()))
        {
            for i in 0..p.value.len() {
                let g = p.grad[i];
                m[i] = b1 * m[i] + ob1 * g;
                v[i] = b2 * v[i] + ob2 * g * g;
                let m_hat = m[i] * ibc1;
                let v_hat = v[i] * ibc2;
                p.value[i] -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
        Ok(())
    }
}
