use serde::{Deserialize, Serialize};

use super::{Parameter, Tensor};
use crate::{Error, Result};

/// RMSprop: `cache = rho·cache + (1-rho)·g²`, `value -= lr·g / (sqrt(cache) + eps)`.
///
/// The cache is created on the first step and is matched to parameters by
/// position, so the parameter list must keep the same order between steps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RmsPropState {
    pub learning_rate: f64,
    pub decay: f64,
    pub epsilon: f64,
    #[serde(skip)]
    cache: Vec<Tensor>,
}

impl Default for RmsPropState {
    fn default() -> Self {
        RmsPropState::new(0.001, 0.9, 1e-8).expect("valid defaults")
    }
}

impl RmsPropState {
    pub fn new(learning_rate: f64, decay: f64, epsilon: f64) -> Result<Self> {
        if !(learning_rate >= 0.0 && learning_rate.is_finite()) {
            return Err(Error::invalid(format!("learning rate {learning_rate} must be >= 0")));
        }
        if !(decay > 0.0 && decay < 1.0) {
            return Err(Error::invalid(format!("decay {decay} is outside (0, 1)")));
        }
        if !(epsilon > 0.0) {
            return Err(Error::invalid(format!("epsilon {epsilon} must be positive")));
        }
        Ok(RmsPropState {
            learning_rate,
            decay,
            epsilon,
            cache: Vec::new(),
        })
    }

    pub fn cache(&self) -> &[Tensor] {
        &self.cache
    }

    pub fn reset(&mut self) {
        self.cache.clear();
    }

    /// Applies one update and zeroes the gradients. Nothing is modified when
    /// any gradient is non-finite.
    pub fn step(&mut self, params: &mut [&mut Parameter]) -> Result<()> {
        if let Some(p) = params.iter().find(|p| !p.grad.all_finite()) {
            return Err(Error::NonFinite(format!("gradient of parameter {}", p.name)));
        }
        if self.cache.is_empty() {
            self.cache = params.iter().map(|p| Tensor::zeros(p.shape())).collect();
        }
        if self.cache.len() != params.len() {
            return Err(Error::invalid(format!(
                "optimizer tracks {} parameters, got {}",
                self.cache.len(),
                params.len()
            )));
        }
        for (p, cache) in params.iter().zip(&self.cache) {
            p.value.check_same("rmsprop_step", cache)?;
        }
        let (lr, rho, eps) = (self.learning_rate, self.decay, self.epsilon);
        for (p, cache) in params.iter_mut().zip(self.cache.iter_mut()) {
            let Parameter { value, grad, .. } = &mut **p;
            for ((v, &g), c) in value
                .data_mut()
                .iter_mut()
                .zip(grad.data())
                .zip(cache.data_mut())
            {
                *c = rho * *c + (1.0 - rho) * g * g;
                *v -= lr * g / (c.sqrt() + eps);
            }
            grad.fill(0.0);
        }
        Ok(())
    }
}
