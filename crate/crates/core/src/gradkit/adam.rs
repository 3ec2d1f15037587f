use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;
use crate::tensor::Tensor;

use super::GradError;

/// Adam hyper-parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for Adam {
    fn default() -> Self {
        Self {
            lr: 0.01,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// First/second moment estimates for one parameter tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState<T> {
    pub m: Tensor<T>,
    pub v: Tensor<T>,
    pub step: u64,
}

impl<T: Scalar> AdamState<T> {
    pub fn new(rows: usize, cols: usize) -> Self {
        Self {
            m: Tensor::zeros(rows, cols),
            v: Tensor::zeros(rows, cols),
            step: 0,
        }
    }

    pub fn like(params: &Tensor<T>) -> Self {
        Self::new(params.rows(), params.cols())
    }
}

impl Adam {
    pub fn with_lr(lr: f64) -> Self {
        Self {
            lr,
            ..Self::default()
        }
    }

    /// One bias-corrected Adam update of `params` in place.
    pub fn step<T: Scalar>(
        &self,
        params: &mut Tensor<T>,
        grads: &Tensor<T>,
        state: &mut AdamState<T>,
    ) -> Result<(), GradError> {
        for (op, other) in [("adam grads", grads), ("adam m", &state.m), ("adam v", &state.v)] {
            params
                .check_same(other)
                .map_err(|source| GradError::Shape { op, source })?;
        }
        state.step += 1;
        let (b1, b2) = (T::lit(self.beta1), T::lit(self.beta2));
        let lr = T::lit(self.lr);
        let eps = T::lit(self.eps);
        let t = state.step as i32;
        let c1 = T::one() - b1.powi(t);
        let c2 = T::one() - b2.powi(t);
        let p = params.data_mut();
        let m = state.m.data_mut();
        let v = state.v.data_mut();
        for (i, &g) in grads.data().iter().enumerate() {
            m[i] = b1 * m[i] + (T::one() - b1) * g;
            v[i] = b2 * v[i] + (T::one() - b2) * g * g;
            let m_hat = m[i] / c1;
            let v_hat = v[i] / c2;
            p[i] = p[i] - lr * m_hat / (v_hat.sqrt() + eps);
        }
        Ok(())
    }
}
