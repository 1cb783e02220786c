use serde::{Deserialize, Serialize};

use super::model::{Gradients, MlpModel};
use crate::Scalar;

/// Adam moments for every trainable tensor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamState<T = f64> {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub step: u64,
    pub m: Vec<Vec<T>>,
    pub v: Vec<Vec<T>>,
}

impl<T: Scalar> AdamState<T> {
    pub fn new(model: &MlpModel<T>, learning_rate: f64) -> Self {
        let zeros: Vec<Vec<T>> = model.params().iter().map(|p| vec![T::zero(); p.len()]).collect();
        Self {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            step: 0,
            m: zeros.clone(),
            v: zeros,
        }
    }

    /// Applies one bias-corrected update to `params`, which must mirror the
    /// shapes the state was created with.
    pub fn update(&mut self, params: &mut [&mut Vec<T>], grads: &[Vec<T>]) {
        assert_eq!(params.len(), self.m.len(), "parameter tensor count");
        assert_eq!(grads.len(), self.m.len(), "gradient tensor count");
        self.step += 1;
        let (b1, b2) = (T::lit(self.beta1), T::lit(self.beta2));
        let t = i32::try_from(self.step).unwrap_or(i32::MAX);
        let c1 = T::one() - b1.powi(t);
        let c2 = T::one() - b2.powi(t);
        let lr = T::lit(self.learning_rate);
        let eps = T::lit(self.epsilon);
        for (((p, g), m), v) in params.iter_mut().zip(grads).zip(&mut self.m).zip(&mut self.v) {
            assert_eq!(p.len(), g.len(), "gradient shape");
            for i in 0..p.len() {
                m[i] = b1 * m[i] + (T::one() - b1) * g[i];
                v[i] = b2 * v[i] + (T::one() - b2) * g[i] * g[i];
                let m_hat = m[i] / c1;
                let v_hat = v[i] / c2;
                p[i] = p[i] - lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
    }
}

/// One Adam step on every trainable tensor of `model`.
pub fn adam_step<T: Scalar>(model: &mut MlpModel<T>, grads: &Gradients<T>, state: &mut AdamState<T>) {
    let mut params = model.params_mut();
    state.update(&mut params, &grads.tensors);
}
