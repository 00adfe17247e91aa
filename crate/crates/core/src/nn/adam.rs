use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::param::Param;
use crate::nn::tensor::{Real, Tensor};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.001,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// Adam with bias-corrected moments, keyed by parameter name.
#[derive(Clone, Debug)]
pub struct AdamState<F> {
    pub config: AdamConfig,
    step: u64,
    moments: BTreeMap<String, (Tensor<F>, Tensor<F>)>,
}

impl<F: Real> AdamState<F> {
    pub fn new(config: AdamConfig) -> Self {
        Self {
            config,
            step: 0,
            moments: BTreeMap::new(),
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    pub fn moments(&self, name: &str) -> Option<(&Tensor<F>, &Tensor<F>)> {
        self.moments.get(name).map(|(m, v)| (m, v))
    }

    /// Applies one update to every parameter from its accumulated gradient.
    ///
    /// All gradients are checked before anything is written, so a non-finite
    /// gradient leaves both parameters and state untouched.
    pub fn step(&mut self, params: &mut [&mut Param<F>]) -> Result<()> {
        for p in params.iter() {
            if p.grad.shape() != p.value.shape() {
                return Err(Error::shape(&p.name, "gradient shape differs from parameter"));
            }
            p.grad
                .ensure_finite(&format!("gradient of `{}`", p.name))?;
        }
        self.step += 1;
        let c = self.config;
        let b1 = F::from_f64(c.beta1);
        let b2 = F::from_f64(c.beta2);
        let one = F::one();
        let bc1 = F::from_f64(1.0 - c.beta1.powi(self.step as i32));
        let bc2 = F::from_f64(1.0 - c.beta2.powi(self.step as i32));
        let lr = F::from_f64(c.learning_rate);
        let eps = F::from_f64(c.epsilon);
        for p in params.iter_mut() {
            let (m, v) = self
                .moments
                .entry(p.name.clone())
                .or_insert_with(|| (Tensor::zeros(p.value.shape()), Tensor::zeros(p.value.shape())));
            if m.shape() != p.value.shape() {
                return Err(Error::shape(&p.name, "optimizer state shape differs from parameter"));
            }
            let theta = p.value.data_mut();
            let grads = p.grad.data();
            for (((th, &g), mi), vi) in theta
                .iter_mut()
                .zip(grads)
                .zip(m.data_mut().iter_mut())
                .zip(v.data_mut().iter_mut())
            {
                *mi = b1 * *mi + (one - b1) * g;
                *vi = b2 * *vi + (one - b2) * g * g;
                let m_hat = *mi / bc1;
                let v_hat = *vi / bc2;
                *th -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
        Ok(())
    }
}
