//! Adam optimizer over MLP parameter blocks.

use crate::nn::mlp::{Mlp, MlpGrads};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig { learning_rate: 1e-3, beta1: 0.9, beta2: 0.999, epsilon: 1e-8 }
    }
}

/// First and second moment accumulators shaped like one MLP.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    cfg: AdamConfig,
    m: MlpGrads,
    v: MlpGrads,
    step: u64,
}

impl AdamState {
    pub fn new(mlp: &Mlp, cfg: AdamConfig) -> AdamState {
        AdamState { cfg, m: MlpGrads::zeros_like(mlp), v: MlpGrads::zeros_like(mlp), step: 0 }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    pub fn apply(&mut self, params: &mut Mlp, grads: &MlpGrads) {
        self.step += 1;
        let t = self.step as i32;
        let lr_t = self.cfg.learning_rate * (1.0 - self.cfg.beta2.powi(t)).sqrt()
            / (1.0 - self.cfg.beta1.powi(t));
        let update_block = |p: &mut [f64], g: &[f64], m: &mut [f64], v: &mut [f64]| {
            for i in 0..p.len() {
                m[i] = self.cfg.beta1 * m[i] + (1.0 - self.cfg.beta1) * g[i];
                v[i] = self.cfg.beta2 * v[i] + (1.0 - self.cfg.beta2) * g[i] * g[i];
                p[i] -= lr_t * m[i] / (v[i].sqrt() + self.cfg.epsilon);
            }
        };
        for l in 0..params.weights.len() {
            update_block(
                &mut params.weights[l],
                &grads.weights[l],
                &mut self.m.weights[l],
                &mut self.v.weights[l],
            );
            update_block(
                &mut params.biases[l],
                &grads.biases[l],
                &mut self.m.biases[l],
                &mut self.v.biases[l],
            );
        }
    }
}
