//! End-to-end fixtures: calibration of the prior pipeline and the training
//! loop on the benchmark tasks.

use whirl_core::align::{default_augmentations, FrozenEmbedder};
use whirl_core::demo::{corrupt, scripted_expert, NoiseConfig};
use whirl_core::optim::{LoopConfig, Trainer};
use whirl_core::prior::{extract_prior, PriorConfig};
use whirl_core::rng::{derive_seed, stream};
use whirl_core::sim::{rollout, success, StepConfig};
use whirl_core::tasks::{build_setup, env_feature_dim, load_scene, TaskKind};

/// Success rate of priors extracted from noiseless expert demos.
fn noiseless_prior_success(scene_name: &str, seeds: u64) -> f64 {
    let scene = load_scene(scene_name).unwrap();
    let step_cfg = StepConfig::default();
    let prior_cfg = PriorConfig::default();
    let mut ok = 0usize;
    for seed in 0..seeds {
        let (demo, achieved) = scripted_expert(&scene, seed).unwrap();
        assert!(achieved);
        let prior_seed = derive_seed(seed, &[stream::PRIOR_EXTRACT, 0]);
        let prior = extract_prior(&demo, &scene.camera, &prior_cfg, prior_seed).unwrap();
        let r = rollout(&scene, &prior, seed, &step_cfg).unwrap();
        if success(&scene, &r).unwrap() {
            ok += 1;
        }
    }
    ok as f64 / seeds as f64
}

#[test]
fn noiseless_priors_succeed_on_drawer_and_door() {
    for scene in ["drawer_a", "drawer_b", "drawer_c", "door_a", "door_b", "door_c"] {
        let rate = noiseless_prior_success(scene, 20);
        assert!(rate >= 0.9, "{scene}: noiseless prior success {rate}");
    }
}

/// Success rate of priors extracted from noisy demos, executed verbatim
/// (zero residual): an upper bound on what iteration 0 spreads around.
fn noisy_prior_success(scene_name: &str, noise: &NoiseConfig, seeds: u64) -> f64 {
    let scene = load_scene(scene_name).unwrap();
    let step_cfg = StepConfig::default();
    let prior_cfg = PriorConfig::default();
    let mut ok = 0usize;
    let mut n = 0usize;
    for seed in 0..seeds {
        let (demo, _) = scripted_expert(&scene, seed).unwrap();
        let noisy = corrupt(&demo, noise, derive_seed(seed, &[stream::DEMO_CORRUPT, 0])).unwrap();
        let prior_seed = derive_seed(seed, &[stream::PRIOR_EXTRACT, 0]);
        let Ok(prior) = extract_prior(&noisy, &scene.camera, &prior_cfg, prior_seed) else {
            continue;
        };
        let r = rollout(&scene, &prior, seed, &step_cfg).unwrap();
        n += 1;
        if success(&scene, &r).unwrap() {
            ok += 1;
        }
    }
    ok as f64 / n as f64
}

#[test]
#[ignore = "calibration probe; run with --ignored for tuning numbers"]
fn probe_prior_success_rates() {
    let noise = NoiseConfig::default();
    for scene in ["drawer_a", "drawer_b", "drawer_c", "door_a", "door_b", "door_c", "dishwasher_a", "shelf_t1", "shelf_h1"] {
        println!("{scene}: noiseless {:.2} noisy {:.2}", noiseless_prior_success(scene, 20), noisy_prior_success(scene, &noise, 40));
    }
}

fn train_drawer(seed: u64, kind: TaskKind) -> whirl_core::optim::LearningCurve {
    let cfg = LoopConfig::default();
    let step_cfg = StepConfig::default();
    let augs = default_augmentations();
    let dim = env_feature_dim(kind).unwrap();
    let embedder =
        FrozenEmbedder::new(cfg.projection_seed, dim, cfg.frame_embed_dim, cfg.video_embed_dim);
    let setup = build_setup(
        kind,
        seed,
        &NoiseConfig::default(),
        &PriorConfig::default(),
        &step_cfg,
        &embedder,
        &augs,
    )
    .unwrap();
    let trainer = Trainer {
        cfg: &cfg,
        step_cfg: &step_cfg,
        base_embedder: &embedder,
        cost_embedder: &embedder,
        augs: &augs,
        cost_masked: true,
        fit_exploration: true,
    };
    trainer.train(&setup, seed, None).unwrap().curve
}

#[test]
#[ignore = "calibration probe; run with --ignored for tuning numbers"]
fn probe_training_curves() {
    for kind in [TaskKind::Drawer, TaskKind::Door] {
        for seed in 1..=5u64 {
            let curve = train_drawer(seed, kind);
            let line: Vec<String> = curve
                .points
                .iter()
                .map(|p| {
                    format!(
                        "it{} train {:.2} test {:.2} cost {:.3}",
                        p.iteration,
                        p.train_success,
                        p.test_success.unwrap_or(f64::NAN),
                        p.mean_cost
                    )
                })
                .collect();
            println!("{kind} seed {seed}: {}", line.join(" | "));
        }
    }
}

#[test]
#[ignore = "calibration probe; run with --ignored for tuning numbers"]
fn probe_variant_ordering() {
    use whirl_core::optim::TrainOutput;
    let kind = TaskKind::Drawer;
    let cfg = LoopConfig::default();
    let step_cfg = StepConfig::default();
    let augs = default_augmentations();
    let dim = env_feature_dim(kind).unwrap();
    let base =
        FrozenEmbedder::new(cfg.projection_seed, dim, cfg.frame_embed_dim, cfg.video_embed_dim);
    let agent_full =
        FrozenEmbedder::new(cfg.projection_seed, dim + whirl_core::align::AGENT_FEATURE_DIM, cfg.frame_embed_dim, cfg.video_embed_dim);

    let mut means = Vec::new();
    for (variant, cost_masked, fit_exploration, bc) in [
        ("whirl", true, true, false),
        ("no_exploration", true, false, false),
        ("no_agent_agnostic", false, true, false),
        ("bc", true, false, true),
    ] {
        let mut finals = Vec::new();
        for seed in 1..=5u64 {
            let setup = build_setup(
                kind,
                seed,
                &NoiseConfig::default(),
                &PriorConfig::default(),
                &step_cfg,
                &base,
                &augs,
            )
            .unwrap();
            let trainer = Trainer {
                cfg: &cfg,
                step_cfg: &step_cfg,
                base_embedder: &base,
                cost_embedder: if cost_masked { &base } else { &agent_full },
                augs: &augs,
                cost_masked,
                fit_exploration,
            };
            let out: TrainOutput = if bc {
                trainer.train_bc(&setup, seed).unwrap()
            } else {
                trainer.train(&setup, seed, None).unwrap()
            };
            finals.push(out.curve.points.last().unwrap().train_success);
        }
        let mean = finals.iter().sum::<f64>() / finals.len() as f64;
        println!("{variant}: finals {finals:?} mean {mean:.3}");
        means.push((variant, mean));
    }
}
