use whirl_core::align::{default_augmentations, FrozenEmbedder};
use whirl_core::demo::NoiseConfig;
use whirl_core::optim::{LoopConfig, Residual, ResidualSampler, Trainer, TrainState};
use whirl_core::prior::PriorConfig;
use whirl_core::rng::rng_from_seed;
use whirl_core::sim::{rollout, success, StepConfig};
use whirl_core::tasks::{build_setup, TaskKind};

#[test]
fn probe_round_one_failure() {
    let seed = 1u64;
    let cfg = LoopConfig { iterations: 1, ..LoopConfig::default() };
    let step_cfg = StepConfig::default();
    let augs = default_augmentations();
    let base = FrozenEmbedder::new(cfg.projection_seed, 1, 16, 64);
    let setup = build_setup(
        TaskKind::Drawer, seed, &NoiseConfig::default(), &PriorConfig::default(),
        &step_cfg, &base, &augs,
    ).unwrap();
    let trainer = Trainer {
        cfg: &cfg, step_cfg: &step_cfg, base_embedder: &base, cost_embedder: &base,
        augs: &augs, cost_masked: true, fit_exploration: true,
    };
    let out = trainer.train(&setup, seed, None).unwrap();
    let report0 = &out.reports[0];

    for (k, inst) in setup.train.iter().enumerate() {
        let d = &report0.per_demo[k];
        // Elite residual stats (normalized by scale).
        let scale = &out.policies.task.scale;
        let mean_elite: Vec<f64> = (0..15)
            .map(|j| {
                d.elites.iter().map(|&i| d.samples[i].residual.0[j] / scale[j]).sum::<f64>()
                    / d.elites.len() as f64
            })
            .collect();
        let elite_norm = mean_elite.iter().map(|v| v * v).sum::<f64>().sqrt();
        // Draw 30 fresh policy samples, roll out, score.
        let mut rng = rng_from_seed(777 + k as u64);
        let mut ok = 0;
        let mut mean_samp = vec![0.0; 15];
        let mut max_norm = 0.0f64;
        for _ in 0..30 {
            let r: Residual = out.policies.task.sample_residual(&inst.condition, &mut rng);
            let normed: Vec<f64> = r.0.iter().zip(scale).map(|(v, s)| v / s).collect();
            let n = normed.iter().map(|v| v * v).sum::<f64>().sqrt();
            max_norm = max_norm.max(n);
            for (a, b) in mean_samp.iter_mut().zip(&normed) {
                *a += b / 30.0;
            }
            let action = inst.prior.apply_residual(&r.0);
            let rr = rollout(&inst.scene, &action, 0, &step_cfg).unwrap();
            if success(&inst.scene, &rr).unwrap() {
                ok += 1;
            }
        }
        let drift: f64 = mean_samp
            .iter()
            .zip(&mean_elite)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        println!(
            "demo {k}: elite-mean norm {elite_norm:.2} | fresh samples ok {ok}/30 max|x| {max_norm:.2} | sample-mean-to-elite-mean {drift:.2}",
        );
        println!("  elite mean  {:?}", mean_elite.iter().map(|v| (v * 100.0).round() / 100.0).collect::<Vec<_>>());
        println!("  sample mean {:?}", mean_samp.iter().map(|v| (v * 100.0).round() / 100.0).collect::<Vec<_>>());
    }
    let _ = TrainState { round_next: 0, policies: out.policies.clone(), curve: out.curve.clone(), reports: vec![] };
}
