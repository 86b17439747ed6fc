//! Residual policies: the CVAE task and exploration policies plus the plain
//! regression policy used by the behavior-cloning baseline.

use crate::nn::{
    cvae_fit, cvae_sample, Activation, AdamConfig, CvaeParams, FitReport, Mlp, MlpGrads,
};
use crate::optim::{LoopConfig, OptimError, Residual};
use crate::rng::rng_from_seed;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Where a sampled residual came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResidualSource {
    PriorGaussian,
    TaskPolicy,
    ExplorePolicy,
}

/// Anything that can propose a residual for a conditioning vector.
pub trait ResidualSampler: Sync {
    fn sample_residual(&self, condition: &[f64], rng: &mut ChaCha8Rng) -> Residual;
    fn is_trained(&self) -> bool;
}

fn gaussian_residual(sigma: &[f64], rng: &mut impl Rng) -> Residual {
    Residual(
        sigma
            .iter()
            .map(|s| {
                let z: f64 = StandardNormal.sample(rng);
                z * s
            })
            .collect(),
    )
}

/// CVAE over raw residuals (meters, radians, fractions). The residual units
/// keep the reconstruction term small enough that the KL weight genuinely
/// pins the posterior to the standard normal the sampler draws from. Until
/// first fit the policy falls back to the iteration-0 Gaussian; afterwards
/// samples decode a standard-normal latent and add a small
/// exploration-floor noise so the sample distribution never collapses.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualPolicy {
    pub cvae: CvaeParams,
    pub trained: bool,
    /// Per-dimension residual scale; the CVAE sees residual / scale.
    pub scale: Vec<f64>,
    /// Frozen initialization, restored before each fit so every round is a
    /// bounded fresh fit to its elite set.
    init: CvaeParams,
    adam: AdamConfig,
    fit_epochs: usize,
    fit_batch: usize,
}

impl ResidualPolicy {
    pub fn new_seeded(x_dim: usize, c_dim: usize, cfg: &LoopConfig, n_mid: usize, seed: u64) -> ResidualPolicy {
        let mut rng = rng_from_seed(seed);
        let cvae = CvaeParams::new_seeded(
            x_dim,
            c_dim,
            cfg.latent_dim,
            &cfg.hidden,
            cfg.kl_weight,
            Activation::Relu,
            &mut rng,
        );
        ResidualPolicy {
            init: cvae.clone(),
            cvae,
            trained: false,
            scale: cfg.sigma_vec(n_mid),
            adam: AdamConfig { learning_rate: cfg.learning_rate, ..AdamConfig::default() },
            fit_epochs: cfg.fit_epochs,
            fit_batch: cfg.fit_batch,
        }
    }

    /// Rebuild a policy from checkpointed parameters; the stored parameters
    /// also serve as the refit initialization.
    pub fn from_parts(cvae: CvaeParams, trained: bool, cfg: &LoopConfig, n_mid: usize) -> ResidualPolicy {
        ResidualPolicy {
            init: cvae.clone(),
            cvae,
            trained,
            scale: cfg.sigma_vec(n_mid),
            adam: AdamConfig { learning_rate: cfg.learning_rate, ..AdamConfig::default() },
            fit_epochs: cfg.fit_epochs,
            fit_batch: cfg.fit_batch,
        }
    }

    /// Fit to elite residuals paired with their conditioning vectors.
    pub fn fit(
        &mut self,
        data: &[(Residual, Vec<f64>)],
        rng: &mut impl Rng,
    ) -> Result<FitReport, OptimError> {
        let dataset: Vec<(Vec<f64>, Vec<f64>)> =
            data.iter().map(|(r, c)| (r.0.clone(), c.clone())).collect();
        let batch = if self.fit_batch == 0 { dataset.len() } else { self.fit_batch };
        self.cvae = self.init.clone();
        let report = cvae_fit(&mut self.cvae, &dataset, self.fit_epochs, batch, self.adam, rng)?;
        self.trained = true;
        Ok(report)
    }
}

impl ResidualSampler for ResidualPolicy {
    fn sample_residual(&self, condition: &[f64], rng: &mut ChaCha8Rng) -> Residual {
        if !self.trained {
            return gaussian_residual(&self.scale, rng);
        }
        let decoded = cvae_sample(&self.cvae, condition, rng).expect("policy dimensions fixed at init");
        Residual(
            decoded
                .iter()
                .zip(&self.scale)
                .map(|(x, s)| {
                    let z: f64 = StandardNormal.sample(rng);
                    x + z * s / 4.0
                })
                .collect(),
        )
    }

    fn is_trained(&self) -> bool {
        self.trained
    }
}

/// Task and exploration policies travelling together.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyPair {
    pub task: ResidualPolicy,
    pub explore: ResidualPolicy,
}

impl PolicyPair {
    pub fn new_seeded(x_dim: usize, c_dim: usize, cfg: &LoopConfig, n_mid: usize, master_seed: u64) -> PolicyPair {
        let task_seed = crate::rng::derive_seed(master_seed, &[crate::rng::stream::POLICY_INIT, 0]);
        let explore_seed = crate::rng::derive_seed(master_seed, &[crate::rng::stream::POLICY_INIT, 1]);
        PolicyPair {
            task: ResidualPolicy::new_seeded(x_dim, c_dim, cfg, n_mid, task_seed),
            explore: ResidualPolicy::new_seeded(x_dim, c_dim, cfg, n_mid, explore_seed),
        }
    }

    /// Mixture draw per Algorithm 1: before any fit, the iteration-0
    /// Gaussian; afterwards the exploration policy with probability
    /// `p_explore`, else the task policy.
    pub fn sample_mixture(
        &self,
        condition: &[f64],
        p_explore: f64,
        rng: &mut ChaCha8Rng,
    ) -> (Residual, ResidualSource) {
        if !self.task.trained {
            return (gaussian_residual(&self.task.scale, rng), ResidualSource::PriorGaussian);
        }
        let u: f64 = rng.random();
        if u < p_explore && self.explore.trained {
            (self.explore.sample_residual(condition, rng), ResidualSource::ExplorePolicy)
        } else {
            (self.task.sample_residual(condition, rng), ResidualSource::TaskPolicy)
        }
    }
}

/// Behavior-cloning baseline: a plain MLP regressed with an L2 loss onto the
/// elite residuals, no latent variable and no iterative refinement.
#[derive(Debug, Clone, PartialEq)]
pub struct BcPolicy {
    pub mlp: Mlp,
    pub trained: bool,
    pub scale: Vec<f64>,
    adam: AdamConfig,
    fit_epochs: usize,
}

impl BcPolicy {
    pub fn new_seeded(x_dim: usize, c_dim: usize, cfg: &LoopConfig, n_mid: usize, seed: u64) -> BcPolicy {
        let mut rng = rng_from_seed(seed);
        let mut sizes = vec![c_dim];
        sizes.extend_from_slice(&cfg.hidden);
        sizes.push(x_dim);
        BcPolicy {
            mlp: Mlp::new_seeded(&sizes, Activation::Relu, &mut rng),
            trained: false,
            scale: cfg.sigma_vec(n_mid),
            adam: AdamConfig { learning_rate: cfg.learning_rate, ..AdamConfig::default() },
            fit_epochs: cfg.fit_epochs,
        }
    }

    /// Full-batch Adam on the summed squared output error.
    pub fn fit(&mut self, data: &[(Residual, Vec<f64>)]) -> Result<FitReport, OptimError> {
        if data.is_empty() {
            return Err(OptimError::Nn(crate::nn::NnError::EmptyDataset));
        }
        let dataset: Vec<(Vec<f64>, Vec<f64>)> =
            data.iter().map(|(r, c)| (r.0.clone(), c.clone())).collect();
        let eval = |mlp: &Mlp| -> Result<f64, OptimError> {
            let mut total = 0.0;
            for (x, c) in &dataset {
                let out = mlp.forward(c)?;
                total += out.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
            }
            Ok(total / dataset.len() as f64)
        };
        let loss_before = eval(&self.mlp)?;
        let mut adam = crate::nn::AdamState::new(&self.mlp, self.adam);
        let mut best = self.mlp.clone();
        let mut best_loss = loss_before;
        for _ in 0..self.fit_epochs {
            let mut acc = MlpGrads::zeros_like(&self.mlp);
            for (x, c) in &dataset {
                let cache = self.mlp.forward_cached(c)?;
                let out_grad: Vec<f64> =
                    cache.output().iter().zip(x).map(|(a, b)| 2.0 * (a - b)).collect();
                let (grads, _) = self.mlp.backward(&cache, &out_grad);
                acc.add_scaled(&grads, 1.0 / dataset.len() as f64);
            }
            adam.apply(&mut self.mlp, &acc);
            let loss = eval(&self.mlp)?;
            if loss < best_loss {
                best_loss = loss;
                best = self.mlp.clone();
            }
        }
        self.mlp = best;
        self.trained = true;
        Ok(FitReport { loss_before, loss_after: best_loss, epochs: self.fit_epochs })
    }
}

impl ResidualSampler for BcPolicy {
    fn sample_residual(&self, condition: &[f64], rng: &mut ChaCha8Rng) -> Residual {
        if !self.trained {
            return gaussian_residual(&self.scale, rng);
        }
        // Plain regression executes its prediction open loop; the
        // exploration floor belongs to the sampling policies.
        let out = self.mlp.forward(condition).expect("policy dimensions fixed at init");
        Residual(out)
    }

    fn is_trained(&self) -> bool {
        self.trained
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> LoopConfig {
        LoopConfig { hidden: vec![16, 16], fit_epochs: 60, ..LoopConfig::default() }
    }

    #[test]
    fn untrained_policy_samples_the_prior_gaussian() {
        let cfg = cfg();
        let pair = PolicyPair::new_seeded(15, 8, &cfg, 1, 3);
        let mut rng = rng_from_seed(0);
        let c = vec![0.0; 8];
        let (r, src) = pair.sample_mixture(&c, cfg.p_explore, &mut rng);
        assert_eq!(src, ResidualSource::PriorGaussian);
        assert_eq!(r.dim(), 15);
    }

    #[test]
    fn sigma_to_zero_limit_gives_zero_residual() {
        let mut tiny = cfg();
        tiny.sigma_translation = 1e-300;
        tiny.sigma_rotation = 1e-300;
        tiny.sigma_gripper = 1e-300;
        tiny.sigma_schedule = 1e-300;
        let pair = PolicyPair::new_seeded(15, 4, &tiny, 1, 3);
        let mut rng = rng_from_seed(1);
        let (r, _) = pair.sample_mixture(&[0.0; 4], tiny.p_explore, &mut rng);
        assert!(r.0.iter().all(|v| v.abs() < 1e-290));
    }

    #[test]
    fn p_explore_zero_draws_only_task_policy() {
        let cfg = cfg();
        let mut pair = PolicyPair::new_seeded(15, 4, &cfg, 1, 3);
        let data: Vec<(Residual, Vec<f64>)> =
            (0..6).map(|i| (Residual(vec![0.01 * i as f64; 15]), vec![0.2; 4])).collect();
        let mut rng = rng_from_seed(2);
        pair.task.fit(&data, &mut rng).unwrap();
        pair.explore.fit(&data, &mut rng).unwrap();
        let mut rng = rng_from_seed(3);
        for _ in 0..200 {
            let (_, src) = pair.sample_mixture(&[0.2; 4], 0.0, &mut rng);
            assert_eq!(src, ResidualSource::TaskPolicy);
        }
    }

    #[test]
    fn mixture_rate_matches_p_explore() {
        let cfg = cfg();
        let mut pair = PolicyPair::new_seeded(15, 4, &cfg, 1, 3);
        let data: Vec<(Residual, Vec<f64>)> =
            (0..6).map(|i| (Residual(vec![0.01 * i as f64; 15]), vec![0.2; 4])).collect();
        let mut rng = rng_from_seed(2);
        pair.task.fit(&data, &mut rng).unwrap();
        pair.explore.fit(&data, &mut rng).unwrap();
        let mut rng = rng_from_seed(4);
        let mut explore_draws = 0usize;
        const N: usize = 10_000;
        for _ in 0..N {
            let (_, src) = pair.sample_mixture(&[0.2; 4], 0.2, &mut rng);
            if src == ResidualSource::ExplorePolicy {
                explore_draws += 1;
            }
        }
        let rate = explore_draws as f64 / N as f64;
        assert!((rate - 0.2).abs() < 0.02, "explore rate {rate}");
    }

    #[test]
    fn safety_proxy_iteration_zero_spread() {
        // 95% of iteration-0 residuals lie within 3 sigma per dimension.
        let cfg = cfg();
        let pair = PolicyPair::new_seeded(15, 4, &cfg, 1, 9);
        let sigma = cfg.sigma_vec(1);
        let mut rng = rng_from_seed(5);
        let mut within = 0usize;
        const N: usize = 2000;
        for _ in 0..N {
            let (r, _) = pair.sample_mixture(&[0.0; 4], cfg.p_explore, &mut rng);
            let inf_norm = r
                .0
                .iter()
                .zip(&sigma)
                .map(|(v, s)| (v / s).abs())
                .fold(0.0f64, f64::max);
            if inf_norm <= 3.0 {
                within += 1;
            }
        }
        assert!(within as f64 / N as f64 >= 0.95, "within-3-sigma rate {}", within as f64 / N as f64);
    }

    #[test]
    fn bc_policy_regresses_to_elite_mean() {
        let cfg = LoopConfig { hidden: vec![16, 16], fit_epochs: 2000, ..LoopConfig::default() };
        let mut bc = BcPolicy::new_seeded(15, 4, &cfg, 1, 7);
        let target = Residual(vec![0.02; 15]);
        let data: Vec<(Residual, Vec<f64>)> = (0..8).map(|_| (target.clone(), vec![0.3; 4])).collect();
        let report = bc.fit(&data).unwrap();
        assert!(report.loss_after <= report.loss_before);
        let out = bc.mlp.forward(&[0.3; 4]).unwrap();
        assert!((out[0] - 0.02).abs() < 0.01, "got {}", out[0]);
    }
}
