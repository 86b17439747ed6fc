//! The outer training loop: per-demo residual sampling, batched rollouts,
//! cost ranking, elite fitting, and held-out evaluation.

use crate::action::Prior;
use crate::align::{
    mask_rollout, unmasked_demo, unmasked_rollout, Augmentation, FrozenEmbedder,
};
use crate::demo::DemoVideo;
use crate::nn::FitReport;
use crate::optim::policy::{BcPolicy, PolicyPair, ResidualSampler, ResidualSource};
use crate::optim::{LoopConfig, OptimError, Residual};
use crate::rng::{derive_seed, rng_from_seed, stream};
const AUG_STREAM: u64 = 0x0A;
use crate::sim::{rollout, success, Rollout, Scene, StepConfig};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// One demonstration bound to its scene, extracted prior and conditioning
/// vector.
#[derive(Debug, Clone)]
pub struct TaskInstance {
    pub name: String,
    pub scene: Scene,
    pub demo: DemoVideo,
    pub prior: Prior,
    pub condition: Vec<f64>,
}

/// Training demonstrations plus held-out instances used only for evaluation;
/// held-out residuals never reach a fitting dataset.
#[derive(Debug, Clone)]
pub struct TaskSetup {
    pub train: Vec<TaskInstance>,
    pub heldout: Vec<TaskInstance>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub residual: Residual,
    pub cost: f64,
    pub change_score: f64,
    pub success: bool,
    pub source: ResidualSource,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemoReport {
    pub demo_name: String,
    pub samples: Vec<SampleRecord>,
    /// Indices of the lowest-cost samples.
    pub elites: Vec<usize>,
    /// Indices of the highest-change samples.
    pub explore_elites: Vec<usize>,
    pub success_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationReport {
    pub round: usize,
    pub per_demo: Vec<DemoReport>,
    pub train_success: f64,
    pub mean_cost: f64,
    pub mean_change_score: f64,
    pub task_fit: Option<FitReport>,
    pub explore_fit: Option<FitReport>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub iteration: usize,
    pub train_success: f64,
    pub test_success: Option<f64>,
    pub mean_cost: f64,
    pub mean_change_score: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct LearningCurve {
    pub points: Vec<CurvePoint>,
}

/// Everything needed to continue a run after a completed round.
#[derive(Debug, Clone)]
pub struct TrainState {
    pub round_next: usize,
    pub policies: PolicyPair,
    pub curve: LearningCurve,
    pub reports: Vec<IterationReport>,
}

#[derive(Debug, Clone)]
pub struct TrainOutput {
    pub curve: LearningCurve,
    pub reports: Vec<IterationReport>,
    pub policies: PolicyPair,
}

/// Indices of the `n` best values; ascending picks lowest (costs), otherwise
/// highest (change scores). Ties break toward the earlier sample.
pub fn select_elites(values: &[f64], n: usize, ascending: bool) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| {
        let ord = values[a].partial_cmp(&values[b]).expect("finite scores");
        let ord = if ascending { ord } else { ord.reverse() };
        ord.then(a.cmp(&b))
    });
    idx.truncate(n.min(values.len()));
    idx
}

/// Loop driver. The two embedders coincide except under the
/// no-agent-agnostic ablation, where the cost embedder sees agent features.
pub struct Trainer<'a> {
    pub cfg: &'a LoopConfig,
    pub step_cfg: &'a StepConfig,
    /// Masked-feature embedder: change score and conditioning vectors.
    pub base_embedder: &'a FrozenEmbedder,
    /// Embedder feeding the task cost.
    pub cost_embedder: &'a FrozenEmbedder,
    pub augs: &'a [Augmentation],
    /// When false the task cost uses unmasked (agent-included) features.
    pub cost_masked: bool,
    /// When false the exploration policy is never fit and never sampled.
    pub fit_exploration: bool,
}

impl<'a> Trainer<'a> {
    fn effective_p_explore(&self) -> f64 {
        if self.fit_exploration {
            self.cfg.p_explore
        } else {
            0.0
        }
    }

    /// Cost augmentations for one round: the configured family with fresh
    /// jitter fields, so ranking noise decorrelates across iterations the
    /// way re-sampled embedding augmentations do.
    fn round_augs(&self, round: usize, master_seed: u64) -> Vec<crate::align::Augmentation> {
        self.augs
            .iter()
            .enumerate()
            .map(|(i, a)| crate::align::Augmentation {
                seed: derive_seed(master_seed, &[AUG_STREAM, round as u64, i as u64]),
                ..*a
            })
            .collect()
    }

    fn rollout_cost(
        &self,
        inst: &TaskInstance,
        r: &Rollout,
        augs: &[crate::align::Augmentation],
    ) -> Result<f64, OptimError> {
        let cost = if self.cost_masked {
            self.cost_embedder.task_cost(&inst.demo, r, augs)?
        } else {
            self.cost_embedder.trajectory_cost(
                &unmasked_demo(&inst.demo, &inst.scene.camera),
                &unmasked_rollout(r, &inst.scene.camera),
                augs,
            )?
        };
        Ok(cost)
    }

    fn execute_sample(
        &self,
        inst: &TaskInstance,
        residual: Residual,
        source: ResidualSource,
        rollout_seed: u64,
        augs: &[crate::align::Augmentation],
    ) -> Result<SampleRecord, OptimError> {
        let action = inst.prior.apply_residual(&residual.0);
        let r = rollout(&inst.scene, &action, rollout_seed, self.step_cfg)?;
        let cost = self.rollout_cost(inst, &r, augs)?;
        let change_score = self.base_embedder.change_score_of(&mask_rollout(&r))?;
        let success = success(&inst.scene, &r)?;
        Ok(SampleRecord { residual, cost, change_score, success, source })
    }

    /// One optimization round over every training demo: draw M residuals
    /// each, execute them, rank by cost, and pick both elite sets. Rollouts
    /// run in parallel; per-sample seeds make results independent of
    /// completion order.
    fn run_round<F>(
        &self,
        train: &[TaskInstance],
        round: usize,
        master_seed: u64,
        draw: F,
    ) -> Result<IterationReport, OptimError>
    where
        F: Fn(usize, usize, &mut rand_chacha::ChaCha8Rng) -> (Residual, ResidualSource) + Sync,
    {
        let m = self.cfg.samples_per_task;
        let round_augs = self.round_augs(round, master_seed);
        let mut per_demo = Vec::with_capacity(train.len());
        for (k, inst) in train.iter().enumerate() {
            let samples: Vec<SampleRecord> = (0..m)
                .into_par_iter()
                .map(|i| {
                    let sample_seed =
                        derive_seed(master_seed, &[stream::SAMPLE, round as u64, k as u64, i as u64]);
                    let mut rng = rng_from_seed(sample_seed);
                    let (residual, source) = draw(k, i, &mut rng);
                    let rollout_seed =
                        derive_seed(master_seed, &[stream::ROLLOUT, round as u64, k as u64, i as u64]);
                    self.execute_sample(inst, residual, source, rollout_seed, &round_augs)
                })
                .collect::<Result<_, _>>()?;

            let costs: Vec<f64> = samples.iter().map(|s| s.cost).collect();
            let changes: Vec<f64> = samples.iter().map(|s| s.change_score).collect();
            let elites = select_elites(&costs, self.cfg.elite_count, true);
            let explore_elites = select_elites(&changes, self.cfg.elite_count, false);

            // Elite dominance holds by construction of the sort; keep the
            // assertion as a guard on the selection rule.
            if elites.len() < samples.len() {
                let worst_elite = elites.iter().map(|&i| costs[i]).fold(f64::NEG_INFINITY, f64::max);
                let best_rest = costs
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| !elites.contains(i))
                    .map(|(_, c)| *c)
                    .fold(f64::INFINITY, f64::min);
                assert!(worst_elite <= best_rest, "elite dominance violated");
            }

            let success_rate =
                samples.iter().filter(|s| s.success).count() as f64 / samples.len() as f64;
            per_demo.push(DemoReport {
                demo_name: inst.name.clone(),
                samples,
                elites,
                explore_elites,
                success_rate,
            });
        }

        let all: Vec<&SampleRecord> = per_demo.iter().flat_map(|d| d.samples.iter()).collect();
        let n = all.len() as f64;
        Ok(IterationReport {
            round,
            train_success: all.iter().filter(|s| s.success).count() as f64 / n,
            mean_cost: all.iter().map(|s| s.cost).sum::<f64>() / n,
            mean_change_score: all.iter().map(|s| s.change_score).sum::<f64>() / n,
            per_demo,
            task_fit: None,
            explore_fit: None,
        })
    }

    /// Success rate of `n_eval` fresh task-policy samples on one instance;
    /// `None` when `n_eval` is zero rather than a silent zero rate.
    pub fn evaluate(
        &self,
        sampler: &dyn ResidualSampler,
        inst: &TaskInstance,
        round: usize,
        inst_idx: usize,
        n_eval: usize,
        master_seed: u64,
    ) -> Result<Option<f64>, OptimError> {
        if n_eval == 0 {
            return Ok(None);
        }
        let successes = (0..n_eval)
            .into_par_iter()
            .map(|e| {
                let seed = derive_seed(
                    master_seed,
                    &[stream::EVAL, round as u64, inst_idx as u64, e as u64],
                );
                let mut rng = rng_from_seed(seed);
                let residual = sampler.sample_residual(&inst.condition, &mut rng);
                let action = inst.prior.apply_residual(&residual.0);
                let r = rollout(&inst.scene, &action, seed, self.step_cfg)?;
                Ok::<bool, OptimError>(success(&inst.scene, &r)?)
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Some(successes.iter().filter(|s| **s).count() as f64 / n_eval as f64))
    }

    fn heldout_success(
        &self,
        sampler: &dyn ResidualSampler,
        heldout: &[TaskInstance],
        round: usize,
        master_seed: u64,
    ) -> Result<Option<f64>, OptimError> {
        if heldout.is_empty() {
            return Ok(None);
        }
        let mut acc = 0.0;
        for (i, inst) in heldout.iter().enumerate() {
            match self.evaluate(sampler, inst, round, i, self.cfg.eval_samples, master_seed)? {
                Some(rate) => acc += rate,
                None => return Ok(None),
            }
        }
        Ok(Some(acc / heldout.len() as f64))
    }

    fn fit_policies(
        &self,
        report: &mut IterationReport,
        train: &[TaskInstance],
        policies: &mut PolicyPair,
        round: usize,
        master_seed: u64,
    ) -> Result<(), OptimError> {
        let mut task_data: Vec<(Residual, Vec<f64>)> = Vec::new();
        let mut explore_data: Vec<(Residual, Vec<f64>)> = Vec::new();
        for (k, demo_report) in report.per_demo.iter().enumerate() {
            for &i in &demo_report.elites {
                task_data.push((demo_report.samples[i].residual.clone(), train[k].condition.clone()));
            }
            for &i in &demo_report.explore_elites {
                explore_data
                    .push((demo_report.samples[i].residual.clone(), train[k].condition.clone()));
            }
        }
        // Fitting data comes from training demos only; held-out instances
        // are structurally absent here.
        let expected = train.len() * self.cfg.elite_count.min(self.cfg.samples_per_task);
        assert_eq!(task_data.len(), expected, "elite dataset size");

        let mut task_rng =
            rng_from_seed(derive_seed(master_seed, &[stream::FIT, round as u64, 0]));
        report.task_fit = Some(policies.task.fit(&task_data, &mut task_rng)?);
        if self.fit_exploration {
            let mut exp_rng =
                rng_from_seed(derive_seed(master_seed, &[stream::FIT, round as u64, 1]));
            report.explore_fit = Some(policies.explore.fit(&explore_data, &mut exp_rng)?);
        }
        Ok(())
    }

    /// Run rounds 0..=iterations from a fresh state. Round 0 samples pure
    /// Gaussian residuals around the prior (its train success is the
    /// prior-only baseline); every later round samples the policy mixture.
    /// Policies are fit after every round except the last, so the final
    /// round measures the fully fitted policy.
    pub fn train(
        &self,
        setup: &TaskSetup,
        master_seed: u64,
        mut on_round_complete: Option<&mut dyn FnMut(&TrainState)>,
    ) -> Result<TrainOutput, OptimError> {
        let state = self.fresh_state(setup, master_seed)?;
        self.train_from(setup, master_seed, state, &mut on_round_complete)
    }

    pub fn fresh_state(&self, setup: &TaskSetup, master_seed: u64) -> Result<TrainState, OptimError> {
        self.cfg.validate()?;
        let first = setup
            .train
            .first()
            .ok_or_else(|| OptimError::InvalidConfig("no training demos".into()))?;
        let x_dim = first.prior.flat_dim();
        let c_dim = first.condition.len();
        for inst in setup.train.iter().chain(&setup.heldout) {
            if inst.prior.flat_dim() != x_dim || inst.condition.len() != c_dim {
                return Err(OptimError::InvalidConfig(
                    "instances disagree on residual or conditioning dimensions".into(),
                ));
            }
        }
        let n_mid = first.prior.w_mid.len();
        Ok(TrainState {
            round_next: 0,
            policies: PolicyPair::new_seeded(x_dim, c_dim, self.cfg, n_mid, master_seed),
            curve: LearningCurve::default(),
            reports: Vec::new(),
        })
    }

    pub fn train_from(
        &self,
        setup: &TaskSetup,
        master_seed: u64,
        mut state: TrainState,
        on_round_complete: &mut Option<&mut dyn FnMut(&TrainState)>,
    ) -> Result<TrainOutput, OptimError> {
        let p_explore = self.effective_p_explore();
        for round in state.round_next..=self.cfg.iterations {
            let policies_ref = &state.policies;
            let mut report = self.run_round(&setup.train, round, master_seed, |k, _, rng| {
                policies_ref.sample_mixture(&setup.train[k].condition, p_explore, rng)
            })?;
            let test_success =
                self.heldout_success(&state.policies.task, &setup.heldout, round, master_seed)?;
            state.curve.points.push(CurvePoint {
                iteration: round,
                train_success: report.train_success,
                test_success,
                mean_cost: report.mean_cost,
                mean_change_score: report.mean_change_score,
            });
            if round < self.cfg.iterations {
                self.fit_policies(&mut report, &setup.train, &mut state.policies, round, master_seed)?;
            }
            state.reports.push(report);
            state.round_next = round + 1;
            if let Some(hook) = on_round_complete.as_deref_mut() {
                hook(&state);
            }
        }
        Ok(TrainOutput { curve: state.curve, reports: state.reports, policies: state.policies })
    }

    /// Behavior-cloning baseline: one prior-only round ranked by the same
    /// cost, a single L2 regression onto the elites, then one evaluation
    /// round sampling the regressed policy.
    pub fn train_bc(&self, setup: &TaskSetup, master_seed: u64) -> Result<TrainOutput, OptimError> {
        self.cfg.validate()?;
        let first = setup
            .train
            .first()
            .ok_or_else(|| OptimError::InvalidConfig("no training demos".into()))?;
        let x_dim = first.prior.flat_dim();
        let c_dim = first.condition.len();
        let n_mid = first.prior.w_mid.len();
        // The CVAE pair exists only to checkpoint a uniform shape; sampling
        // goes through the regression policy.
        let mut policies = PolicyPair::new_seeded(x_dim, c_dim, self.cfg, n_mid, master_seed);
        let bc_seed = derive_seed(master_seed, &[stream::POLICY_INIT, 2]);
        let mut bc = BcPolicy::new_seeded(x_dim, c_dim, self.cfg, n_mid, bc_seed);

        let mut curve = LearningCurve::default();
        let mut reports = Vec::new();

        let gaussian = &policies;
        let mut report0 = self.run_round(&setup.train, 0, master_seed, |k, _, rng| {
            gaussian.sample_mixture(&setup.train[k].condition, 0.0, rng)
        })?;
        let test0 = self.heldout_success(&bc, &setup.heldout, 0, master_seed)?;
        curve.points.push(CurvePoint {
            iteration: 0,
            train_success: report0.train_success,
            test_success: test0,
            mean_cost: report0.mean_cost,
            mean_change_score: report0.mean_change_score,
        });

        let mut bc_data: Vec<(Residual, Vec<f64>)> = Vec::new();
        for (k, demo_report) in report0.per_demo.iter().enumerate() {
            for &i in &demo_report.elites {
                bc_data.push((demo_report.samples[i].residual.clone(), setup.train[k].condition.clone()));
            }
        }
        report0.task_fit = Some(bc.fit(&bc_data)?);
        reports.push(report0);

        let bc_ref = &bc;
        let report1 = self.run_round(&setup.train, 1, master_seed, |k, _, rng| {
            (bc_ref.sample_residual(&setup.train[k].condition, rng), ResidualSource::TaskPolicy)
        })?;
        let test1 = self.heldout_success(&bc, &setup.heldout, 1, master_seed)?;
        curve.points.push(CurvePoint {
            iteration: 1,
            train_success: report1.train_success,
            test_success: test1,
            mean_cost: report1.mean_cost,
            mean_change_score: report1.mean_change_score,
        });
        reports.push(report1);

        // Keep the task flag truthful for anyone inspecting the output.
        policies.task.trained = false;
        Ok(TrainOutput { curve, reports, policies })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn elite_selection_rules() {
        let costs = [5.0, 1.0, 3.0, 2.0, 4.0];
        assert_eq!(select_elites(&costs, 2, true), vec![1, 3]);
        // Highest-change selection.
        let changes = [0.1, 0.9, 0.4, 0.9, 0.2];
        assert_eq!(select_elites(&changes, 2, false), vec![1, 3]);
        // n = len keeps every sample.
        assert_eq!(select_elites(&costs, 5, true).len(), 5);
        // Ties break toward the earlier index.
        let tied = [2.0, 1.0, 1.0, 3.0];
        assert_eq!(select_elites(&tied, 1, true), vec![1]);
    }
}
