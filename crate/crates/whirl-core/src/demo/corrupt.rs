//! Detection-noise corruption of clean demonstrations.

use crate::demo::{ContactClass, DemoError, DemoVideo, HandFrame, NoiseConfig};
use crate::math::{Pose, Vec3};
use crate::rng::rng_from_seed;
use crate::sim::EnvSnapshot;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

fn gauss(rng: &mut impl Rng, sigma: f64) -> f64 {
    let z: f64 = StandardNormal.sample(rng);
    z * sigma
}

fn lerp(a: f64, b: f64, t: f64) -> f64 {
    a + (b - a) * t
}

fn lerp3(a: Vec3, b: Vec3, t: f64) -> Vec3 {
    Vec3::new(lerp(a.x, b.x, t), lerp(a.y, b.y, t), lerp(a.z, b.z, t))
}

fn lerp_snapshot(a: &EnvSnapshot, b: &EnvSnapshot, t: f64) -> EnvSnapshot {
    EnvSnapshot {
        joint_values: a
            .joint_values
            .iter()
            .zip(&b.joint_values)
            .map(|(x, y)| lerp(*x, *y, t))
            .collect(),
        object_poses: a
            .object_poses
            .iter()
            .zip(&b.object_poses)
            .map(|(p, q)| Pose::new(lerp3(p.position, q.position, t), lerp3(p.ypr, q.ypr, t)))
            .collect(),
    }
}

/// Rebuild the pixel box and depth for a new camera-frame hand position,
/// using the intrinsics implied by the original frame, so detections stay
/// internally consistent after perturbation or interpolation.
fn rebuild_projection(original: &HandFrame, new_hand: Vec3) -> ([f64; 4], f64) {
    let [u0, v0, u1, v1] = original.bbox;
    let z_old = original.hand.z;
    // Expert boxes are 2 * half_size * f / z wide; recover f and the center.
    let fx = (u1 - u0) * z_old / (2.0 * crate::demo::expert::HAND_HALF_SIZE_M);
    let fy = (v1 - v0) * z_old / (2.0 * crate::demo::expert::HAND_HALF_SIZE_M);
    let cx = (u0 + u1) * 0.5 - fx * original.hand.x / z_old;
    let cy = (v0 + v1) * 0.5 - fy * original.hand.y / z_old;
    let cu = fx * new_hand.x / new_hand.z + cx;
    let cv = fy * new_hand.y / new_hand.z + cy;
    let half_u = fx * crate::demo::expert::HAND_HALF_SIZE_M / new_hand.z;
    let half_v = fy * crate::demo::expert::HAND_HALF_SIZE_M / new_hand.z;
    ([cu - half_u, cv - half_v, cu + half_u, cv + half_v], new_hand.z)
}

/// Apply position, contact, wrist, time-warp and dropout noise to a demo.
/// Deterministic given (demo, noise, seed); with `NoiseConfig::zero()` the
/// output equals the input.
pub fn corrupt(demo: &DemoVideo, noise: &NoiseConfig, seed: u64) -> Result<DemoVideo, DemoError> {
    demo.validate()?;
    noise.validate()?;
    let mut rng = rng_from_seed(seed);

    // One calibration-style offset for the whole demonstration, then
    // independent per-frame detection noise on top.
    let bias = Vec3::new(
        gauss(&mut rng, noise.bias_sigma),
        gauss(&mut rng, noise.bias_sigma),
        gauss(&mut rng, noise.bias_sigma),
    );
    let mut frames: Vec<HandFrame> = demo.frames.clone();
    for frame in &mut frames {
        let original = frame.clone();
        frame.hand = frame.hand
            + bias
            + Vec3::new(
                gauss(&mut rng, noise.pos_sigma),
                gauss(&mut rng, noise.pos_sigma),
                gauss(&mut rng, noise.pos_sigma),
            );
        let (bbox, depth) = rebuild_projection(&original, frame.hand);
        frame.bbox = bbox;
        frame.depth = depth;
        frame.wrist = frame.wrist
            + Vec3::new(
                gauss(&mut rng, noise.wrist_sigma),
                gauss(&mut rng, noise.wrist_sigma),
                gauss(&mut rng, noise.wrist_sigma),
            );
        let flip: f64 = rng.random();
        if flip < noise.contact_flip_prob {
            let offset = rng.random_range(1..ContactClass::COUNT);
            let idx = (frame.contact.index() + offset) % ContactClass::COUNT;
            frame.contact = ContactClass::from_index(idx).expect("index in range");
        }
    }
    let mut truth = demo.env_truth.clone();

    // Time resampling by a length factor drawn from the warp range.
    let factor = if noise.time_warp_range[0] == noise.time_warp_range[1] {
        noise.time_warp_range[0]
    } else {
        rng.random_range(noise.time_warp_range[0]..noise.time_warp_range[1])
    };
    let t_in = frames.len();
    let t_out = ((t_in as f64 * factor).round() as usize).max(DemoVideo::MIN_LEN);
    if t_out != t_in || factor != 1.0 {
        let mut new_frames = Vec::with_capacity(t_out);
        let mut new_truth = Vec::with_capacity(t_out);
        for i in 0..t_out {
            let src = if t_out == 1 {
                0.0
            } else {
                i as f64 * (t_in - 1) as f64 / (t_out - 1) as f64
            };
            let lo = src.floor() as usize;
            let hi = (lo + 1).min(t_in - 1);
            let t = src - lo as f64;
            let a = &frames[lo];
            let b = &frames[hi];
            let hand = lerp3(a.hand, b.hand, t);
            let (bbox, depth) = rebuild_projection(a, hand);
            new_frames.push(HandFrame {
                hand,
                bbox,
                wrist: lerp3(a.wrist, b.wrist, t),
                contact: if t < 0.5 { a.contact } else { b.contact },
                depth,
            });
            new_truth.push(lerp_snapshot(&truth[lo], &truth[hi], t));
        }
        frames = new_frames;
        truth = new_truth;
    }

    // Frame dropout with a hard floor on the output length.
    if noise.dropout_prob > 0.0 {
        let keep: Vec<bool> = (0..frames.len())
            .map(|_| rng.random::<f64>() >= noise.dropout_prob)
            .collect();
        let kept = keep.iter().filter(|k| **k).count();
        if kept >= DemoVideo::MIN_LEN {
            let mut new_frames = Vec::with_capacity(kept);
            let mut new_truth = Vec::with_capacity(kept);
            for (i, k) in keep.iter().enumerate() {
                if *k {
                    new_frames.push(frames[i].clone());
                    new_truth.push(truth[i].clone());
                }
            }
            frames = new_frames;
            truth = new_truth;
        }
    }

    Ok(DemoVideo { scene_ref: demo.scene_ref.clone(), frames, env_truth: truth })
}
