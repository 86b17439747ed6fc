//! Agent-agnostic trajectory alignment.
//!
//! The simulation analog of inpainting the agent out of a video: trajectories
//! reduce to per-frame environment features (joint values and object poses),
//! embedded by a frozen random projection. The task cost is the distance
//! between pooled video embeddings; the exploration score is the largest
//! pairwise frame-embedding distance within one rollout.

use crate::demo::DemoVideo;
use crate::rng::rng_from_seed;
use crate::sim::{CameraModel, Rollout};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AlignError {
    #[error("trajectory too short: {len} frames, need {need}")]
    TrajectoryTooShort { len: usize, need: usize },
    #[error("feature dimension mismatch: expected {expected}, got {got}")]
    DimMismatch { expected: usize, got: usize },
    #[error("invalid augmentation: {0}")]
    InvalidAugmentation(String),
}

/// Per-frame feature vectors with the agent removed (or, for the ablation
/// path, deliberately kept).
#[derive(Debug, Clone, PartialEq)]
pub struct EnvOnlyTrajectory {
    pub frames: Vec<Vec<f64>>,
}

impl EnvOnlyTrajectory {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.frames.first().map_or(0, |f| f.len())
    }
}

/// Remove the agent from a rollout: joint values and object poses only.
pub fn mask_rollout(rollout: &Rollout) -> EnvOnlyTrajectory {
    EnvOnlyTrajectory {
        frames: rollout.frames.iter().map(|s| s.env_snapshot().features()).collect(),
    }
}

/// Remove the agent from a demonstration using its ground-truth environment
/// stream (the inpainting stand-in; hand detections never enter).
pub fn mask_demo(demo: &DemoVideo) -> EnvOnlyTrajectory {
    EnvOnlyTrajectory {
        frames: demo.env_truth.iter().map(|s| s.features()).collect(),
    }
}

/// Ablation features: environment plus the agent as the video sees it. The
/// un-inpainted agent lives in image space, so both sides append the pixel
/// position and depth of the acting agent (hand or end effector), plus
/// wrist and closure. Image coordinates dwarf the metric environment
/// channels exactly the way an agent-dominated video embedding does.
pub const AGENT_FEATURE_DIM: usize = 11;
const AGENT_BOX_HALF_M: f64 = 0.05;

pub fn unmasked_rollout(rollout: &Rollout, camera: &CameraModel) -> EnvOnlyTrajectory {
    EnvOnlyTrajectory {
        frames: rollout
            .frames
            .iter()
            .map(|s| {
                let mut f = s.env_snapshot().features();
                let cam = camera.to_camera(s.ee.position);
                let (u, v) = camera.project(cam);
                let hu = camera.fx * AGENT_BOX_HALF_M / cam.z;
                let hv = camera.fy * AGENT_BOX_HALF_M / cam.z;
                f.extend_from_slice(&[u, v, u - hu, v - hv, u + hu, v + hv, cam.z]);
                f.extend_from_slice(&s.ee.ypr.to_array());
                f.push(1.0 - s.ee.aperture);
                f
            })
            .collect(),
    }
}

pub fn unmasked_demo(demo: &DemoVideo, camera: &CameraModel) -> EnvOnlyTrajectory {
    EnvOnlyTrajectory {
        frames: demo
            .env_truth
            .iter()
            .zip(&demo.frames)
            .map(|(s, hf)| {
                let mut f = s.features();
                let (u, v) = camera.project(hf.hand);
                f.extend_from_slice(&[u, v]);
                f.extend_from_slice(&hf.bbox);
                f.push(hf.depth);
                f.extend_from_slice(&hf.wrist.to_array());
                f.push(if hf.contact.is_contact() { 1.0 } else { 0.0 });
                f
            })
            .collect(),
    }
}

/// One video-level augmentation: resample the time axis, crop from the
/// start, and jitter features.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Augmentation {
    pub time_resample_factor: f64,
    pub start_crop_frac: f64,
    pub feature_noise_sigma: f64,
    pub seed: u64,
}

impl Augmentation {
    pub const IDENTITY: Augmentation = Augmentation {
        time_resample_factor: 1.0,
        start_crop_frac: 0.0,
        feature_noise_sigma: 0.0,
        seed: 0,
    };

    pub fn validate(&self) -> Result<(), AlignError> {
        if !(0.5..=2.0).contains(&self.time_resample_factor) {
            return Err(AlignError::InvalidAugmentation(format!(
                "resample factor {} outside [0.5, 2.0]",
                self.time_resample_factor
            )));
        }
        if !(0.0..=0.5).contains(&self.start_crop_frac) {
            return Err(AlignError::InvalidAugmentation(format!(
                "crop fraction {} must keep at least half the frames",
                self.start_crop_frac
            )));
        }
        if self.feature_noise_sigma < 0.0 {
            return Err(AlignError::InvalidAugmentation("negative noise sigma".into()));
        }
        Ok(())
    }
}

/// Default augmentation family: three time resamplings plus an extra
/// jittered copy, every member carrying its own feature jitter. The jitter
/// is a frozen random field over feature space, so costs stay deterministic
/// while rankings carry measurement noise the way real video-alignment
/// embeddings do.
pub fn default_augmentations() -> Vec<Augmentation> {
    let sigma = 0.35;
    vec![
        Augmentation { time_resample_factor: 0.8, feature_noise_sigma: sigma, seed: 1, ..Augmentation::IDENTITY },
        Augmentation { feature_noise_sigma: sigma, seed: 2, ..Augmentation::IDENTITY },
        Augmentation { time_resample_factor: 1.25, feature_noise_sigma: sigma, seed: 3, ..Augmentation::IDENTITY },
        Augmentation { feature_noise_sigma: sigma, seed: 4, ..Augmentation::IDENTITY },
    ]
}

/// Frozen random-projection embedder. Seeded once per experiment; identical
/// seeds and dimensions give identical embeddings forever after.
#[derive(Debug, Clone, PartialEq)]
pub struct FrozenEmbedder {
    feature_dim: usize,
    frame_dim: usize,
    video_dim: usize,
    /// (frame_dim x feature_dim), row-major.
    frame_proj: Vec<f64>,
    frame_bias: Vec<f64>,
    /// (video_dim x 3*frame_dim), row-major.
    video_proj: Vec<f64>,
}

impl FrozenEmbedder {
    pub fn new(seed: u64, feature_dim: usize, frame_dim: usize, video_dim: usize) -> FrozenEmbedder {
        let mut rng = rng_from_seed(seed);
        let mut gauss = |scale: f64| {
            let z: f64 = StandardNormal.sample(&mut rng);
            z * scale
        };
        let frame_scale = 1.0 / (feature_dim as f64).sqrt();
        let frame_proj = (0..frame_dim * feature_dim).map(|_| gauss(frame_scale)).collect();
        let frame_bias = (0..frame_dim).map(|_| gauss(0.1)).collect();
        let video_scale = 1.0 / (3.0 * frame_dim as f64).sqrt();
        let video_proj = (0..video_dim * 3 * frame_dim).map(|_| gauss(video_scale)).collect();
        FrozenEmbedder { feature_dim, frame_dim, video_dim, frame_proj, frame_bias, video_proj }
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    pub fn video_dim(&self) -> usize {
        self.video_dim
    }

    /// Frame embedding: tanh of the frozen affine projection.
    pub fn frame_embed(&self, features: &[f64]) -> Result<Vec<f64>, AlignError> {
        if features.len() != self.feature_dim {
            return Err(AlignError::DimMismatch { expected: self.feature_dim, got: features.len() });
        }
        Ok((0..self.frame_dim)
            .map(|o| {
                let row = &self.frame_proj[o * self.feature_dim..(o + 1) * self.feature_dim];
                let mut acc = self.frame_bias[o];
                for (w, x) in row.iter().zip(features) {
                    acc += w * x;
                }
                acc.tanh()
            })
            .collect())
    }

    /// Operator norm of the frame projection by power iteration; the frame
    /// embedding is Lipschitz with this constant (tanh is 1-Lipschitz).
    pub fn frame_proj_operator_norm(&self) -> f64 {
        let mut v = vec![1.0 / (self.feature_dim as f64).sqrt(); self.feature_dim];
        let mut norm = 0.0;
        for _ in 0..100 {
            // u = P v
            let u: Vec<f64> = (0..self.frame_dim)
                .map(|o| {
                    let row = &self.frame_proj[o * self.feature_dim..(o + 1) * self.feature_dim];
                    row.iter().zip(&v).map(|(w, x)| w * x).sum()
                })
                .collect();
            // w = P^T u
            let mut w = vec![0.0; self.feature_dim];
            for o in 0..self.frame_dim {
                let row = &self.frame_proj[o * self.feature_dim..(o + 1) * self.feature_dim];
                for (wi, p) in w.iter_mut().zip(row) {
                    *wi += p * u[o];
                }
            }
            let wn = w.iter().map(|x| x * x).sum::<f64>().sqrt();
            if wn == 0.0 {
                return 0.0;
            }
            v = w.iter().map(|x| x / wn).collect();
            let un = u.iter().map(|x| x * x).sum::<f64>().sqrt();
            norm = un;
        }
        norm
    }

    fn apply_augmentation(&self, traj: &EnvOnlyTrajectory, aug: &Augmentation) -> EnvOnlyTrajectory {
        let t_in = traj.len();
        let t_resampled = ((t_in as f64 * aug.time_resample_factor).round() as usize).max(2);
        let mut frames: Vec<Vec<f64>> = if t_resampled == t_in {
            traj.frames.clone()
        } else {
            (0..t_resampled)
                .map(|i| {
                    let src = i as f64 * (t_in - 1) as f64 / (t_resampled - 1) as f64;
                    let lo = src.floor() as usize;
                    let hi = (lo + 1).min(t_in - 1);
                    let t = src - lo as f64;
                    traj.frames[lo]
                        .iter()
                        .zip(&traj.frames[hi])
                        .map(|(a, b)| a + (b - a) * t)
                        .collect()
                })
                .collect()
        };
        let crop = ((frames.len() as f64) * aug.start_crop_frac).floor() as usize;
        let crop = crop.min(frames.len().saturating_sub(2));
        if crop > 0 {
            frames.drain(..crop);
        }
        if aug.feature_noise_sigma > 0.0 {
            let mut rng = rng_from_seed(aug.seed);
            for f in &mut frames {
                for x in f.iter_mut() {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    *x += z * aug.feature_noise_sigma;
                }
            }
        }
        EnvOnlyTrajectory { frames }
    }

    /// Video embedding: per augmentation, embed each frame and pool
    /// (mean, final-minus-initial, max), project to the video dimension;
    /// the result is the mean over augmentations. An empty augmentation
    /// list means a single identity augmentation.
    pub fn video_embed(
        &self,
        traj: &EnvOnlyTrajectory,
        augs: &[Augmentation],
    ) -> Result<Vec<f64>, AlignError> {
        if traj.len() < 4 {
            return Err(AlignError::TrajectoryTooShort { len: traj.len(), need: 4 });
        }
        let identity = [Augmentation::IDENTITY];
        let augs: &[Augmentation] = if augs.is_empty() { &identity } else { augs };
        for a in augs {
            a.validate()?;
        }

        let mut phi = vec![0.0; self.video_dim];
        for aug in augs {
            let augmented = self.apply_augmentation(traj, aug);
            let embs: Vec<Vec<f64>> = augmented
                .frames
                .iter()
                .map(|f| self.frame_embed(f))
                .collect::<Result<_, _>>()?;
            let n = embs.len() as f64;
            let mut pooled = vec![0.0; 3 * self.frame_dim];
            for e in &embs {
                for (p, x) in pooled[..self.frame_dim].iter_mut().zip(e) {
                    *p += x / n;
                }
            }
            let first = &embs[0];
            let last = &embs[embs.len() - 1];
            for i in 0..self.frame_dim {
                pooled[self.frame_dim + i] = last[i] - first[i];
            }
            for i in 0..self.frame_dim {
                pooled[2 * self.frame_dim + i] =
                    embs.iter().map(|e| e[i]).fold(f64::NEG_INFINITY, f64::max);
            }
            for o in 0..self.video_dim {
                let row = &self.video_proj[o * 3 * self.frame_dim..(o + 1) * 3 * self.frame_dim];
                let mut acc = 0.0;
                for (w, x) in row.iter().zip(&pooled) {
                    acc += w * x;
                }
                phi[o] += acc / augs.len() as f64;
            }
        }
        Ok(phi)
    }

    /// Euclidean distance between the pooled embeddings of two trajectories.
    pub fn trajectory_cost(
        &self,
        a: &EnvOnlyTrajectory,
        b: &EnvOnlyTrajectory,
        augs: &[Augmentation],
    ) -> Result<f64, AlignError> {
        let pa = self.video_embed(a, augs)?;
        let pb = self.video_embed(b, augs)?;
        Ok(euclidean(&pa, &pb))
    }

    /// Task cost between a demonstration and a rollout on masked features.
    pub fn task_cost(
        &self,
        demo: &DemoVideo,
        rollout: &Rollout,
        augs: &[Augmentation],
    ) -> Result<f64, AlignError> {
        self.trajectory_cost(&mask_demo(demo), &mask_rollout(rollout), augs)
    }

    /// Exploration objective: the maximum pairwise frame-embedding distance
    /// within the masked rollout trajectory.
    pub fn change_score(&self, rollout: &Rollout) -> Result<f64, AlignError> {
        self.change_score_of(&mask_rollout(rollout))
    }

    pub fn change_score_of(&self, traj: &EnvOnlyTrajectory) -> Result<f64, AlignError> {
        if traj.len() < 2 {
            return Err(AlignError::TrajectoryTooShort { len: traj.len(), need: 2 });
        }
        let embs: Vec<Vec<f64>> = traj
            .frames
            .iter()
            .map(|f| self.frame_embed(f))
            .collect::<Result<_, _>>()?;
        let mut best = 0.0f64;
        for i in 0..embs.len() {
            for j in (i + 1)..embs.len() {
                best = best.max(euclidean(&embs[i], &embs[j]));
            }
        }
        Ok(best)
    }

    /// Conditioning vector for the policies: the masked demo's video
    /// embedding concatenated with the normalized prior.
    pub fn demo_condition_vector(
        &self,
        demo: &DemoVideo,
        prior: &crate::action::Prior,
        augs: &[Augmentation],
    ) -> Result<Vec<f64>, AlignError> {
        let mut c = self.video_embed(&mask_demo(demo), augs)?;
        c.extend(prior.normalized_flat());
        Ok(c)
    }
}

pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}
