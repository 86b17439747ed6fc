//! Sampling-based policy optimization: residual sampling around the prior,
//! batched rollouts, cost ranking, elite selection, and CVAE fitting for the
//! task and exploration policies.

pub mod policy;
pub mod trainer;

pub use policy::{BcPolicy, PolicyPair, ResidualPolicy, ResidualSampler, ResidualSource};
pub use trainer::{
    select_elites, CurvePoint, DemoReport, IterationReport, LearningCurve, SampleRecord,
    TaskInstance, TaskSetup, TrainOutput, TrainState, Trainer,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum OptimError {
    #[error("invalid loop config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Sim(#[from] crate::sim::SimError),
    #[error(transparent)]
    Align(#[from] crate::align::AlignError),
    #[error(transparent)]
    Nn(#[from] crate::nn::NnError),
}

/// Additive correction to the prior: waypoint, wrist and gripper deltas plus
/// the two schedule-fraction deltas.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Residual(pub Vec<f64>);

impl Residual {
    pub fn zeros(dim: usize) -> Residual {
        Residual(vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }
}

/// Loop hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LoopConfig {
    /// Samples per demonstration per iteration (M).
    pub samples_per_task: usize,
    /// Elite set size per demonstration.
    pub elite_count: usize,
    /// Iteration-0 residual spread per dimension class.
    pub sigma_translation: f64,
    pub sigma_rotation: f64,
    pub sigma_gripper: f64,
    pub sigma_schedule: f64,
    /// Probability of drawing from the exploration policy after iteration 0.
    pub p_explore: f64,
    /// Policy-fitted iterations after the prior-only round.
    pub iterations: usize,
    /// Fresh samples per held-out instance when evaluating.
    pub eval_samples: usize,
    pub fit_epochs: usize,
    /// Mini-batch size for fitting; 0 means the full elite dataset.
    pub fit_batch: usize,
    pub learning_rate: f64,
    pub latent_dim: usize,
    pub kl_weight: f64,
    pub hidden: Vec<usize>,
    pub frame_embed_dim: usize,
    pub video_embed_dim: usize,
    /// Seed of the frozen embedding projections, fixed per experiment.
    pub projection_seed: u64,
}

impl Default for LoopConfig {
    fn default() -> Self {
        LoopConfig {
            samples_per_task: 30,
            elite_count: 10,
            sigma_translation: 0.03,
            sigma_rotation: 0.1,
            sigma_gripper: 0.1,
            sigma_schedule: 0.1,
            p_explore: 0.2,
            iterations: 3,
            eval_samples: 30,
            fit_epochs: 300,
            fit_batch: 0,
            learning_rate: 1e-3,
            latent_dim: 4,
            kl_weight: 5e-4,
            hidden: vec![64, 64, 64],
            frame_embed_dim: 16,
            video_embed_dim: 64,
            projection_seed: 0x57A1_1C00,
        }
    }
}

impl LoopConfig {
    pub fn validate(&self) -> Result<(), OptimError> {
        if self.samples_per_task == 0 {
            return Err(OptimError::InvalidConfig("samples_per_task must be positive".into()));
        }
        if self.elite_count == 0 || self.elite_count > self.samples_per_task {
            return Err(OptimError::InvalidConfig(format!(
                "elite_count {} must lie in [1, samples_per_task {}]",
                self.elite_count, self.samples_per_task
            )));
        }
        if !(0.0..=1.0).contains(&self.p_explore) {
            return Err(OptimError::InvalidConfig("p_explore must lie in [0,1]".into()));
        }
        for (name, s) in [
            ("sigma_translation", self.sigma_translation),
            ("sigma_rotation", self.sigma_rotation),
            ("sigma_gripper", self.sigma_gripper),
            ("sigma_schedule", self.sigma_schedule),
        ] {
            if s <= 0.0 {
                return Err(OptimError::InvalidConfig(format!("{name} must be positive")));
            }
        }
        Ok(())
    }

    /// Per-dimension residual spread for a prior with `n_mid` midpoints:
    /// translations, then wrist rotations, gripper, and the two schedule
    /// fractions.
    pub fn sigma_vec(&self, n_mid: usize) -> Vec<f64> {
        let mut sigma = Vec::with_capacity(3 * (2 + n_mid) + 6);
        for _ in 0..3 * (2 + n_mid) {
            sigma.push(self.sigma_translation);
        }
        for _ in 0..3 {
            sigma.push(self.sigma_rotation);
        }
        sigma.push(self.sigma_gripper);
        sigma.push(self.sigma_schedule);
        sigma.push(self.sigma_schedule);
        sigma
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_validates() {
        LoopConfig::default().validate().unwrap();
    }

    #[test]
    fn sigma_vec_matches_residual_layout() {
        let cfg = LoopConfig::default();
        let sigma = cfg.sigma_vec(1);
        assert_eq!(sigma.len(), 15);
        assert_eq!(sigma[0], 0.03);
        assert_eq!(sigma[8], 0.03);
        assert_eq!(sigma[9], 0.1);
        assert_eq!(sigma[12], 0.1);
        assert_eq!(sigma[14], 0.1);
    }

    #[test]
    fn invalid_configs_rejected() {
        let mut cfg = LoopConfig::default();
        cfg.elite_count = 31;
        assert!(cfg.validate().is_err());
        let mut cfg = LoopConfig::default();
        cfg.p_explore = 1.5;
        assert!(cfg.validate().is_err());
    }
}
