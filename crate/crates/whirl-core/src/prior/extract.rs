//! Hand-prior sampling and the camera-to-robot action mapping.

use crate::action::{Prior, Schedule};
use crate::demo::DemoVideo;
use crate::math::Vec3;
use crate::prior::{InteractionWindow, PriorConfig, PriorError};
use crate::rng::rng_from_seed;
use crate::sim::CameraModel;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

/// Camera-frame hand quantities sampled from a demonstration window.
#[derive(Debug, Clone, PartialEq)]
pub struct HandPrior {
    pub h_interaction: Vec3,
    pub h_mid: Vec<Vec3>,
    pub h_end: Vec3,
    pub theta_hand: Vec3,
    /// Per-frame close command: true while the hand holds the target.
    pub grasp_commands: Vec<bool>,
    pub window: InteractionWindow,
}

fn gauss3(rng: &mut impl Rng, sigma: f64) -> Vec3 {
    let mut draw = || {
        let z: f64 = StandardNormal.sample(rng);
        z * sigma
    };
    Vec3::new(draw(), draw(), draw())
}

/// Per-component circular mean of a set of angle triples.
fn circular_mean(values: impl Iterator<Item = Vec3> + Clone) -> Vec3 {
    let mut sums = [(0.0f64, 0.0f64); 3];
    let mut n = 0usize;
    for v in values {
        for (acc, angle) in sums.iter_mut().zip([v.x, v.y, v.z]) {
            acc.0 += angle.sin();
            acc.1 += angle.cos();
        }
        n += 1;
    }
    assert!(n > 0, "circular mean of an empty window");
    Vec3::new(
        sums[0].0.atan2(sums[0].1),
        sums[1].0.atan2(sums[1].1),
        sums[2].0.atan2(sums[2].1),
    )
}

/// Sample waypoints around the detected interaction window: start and end
/// points from Gaussians centered on the boundary hand positions, midpoints
/// at configured interior fractions, the wrist as a circular mean over the
/// window, and close commands covering exactly the window.
pub fn extract_hand_prior(
    demo: &DemoVideo,
    window: &InteractionWindow,
    cfg: &PriorConfig,
    seed: u64,
) -> Result<HandPrior, PriorError> {
    let t_len = demo.len();
    if window.t_interaction >= window.t_end || window.t_end >= t_len {
        return Err(PriorError::InvalidWindow {
            t_interaction: window.t_interaction,
            t_end: window.t_end,
            len: t_len,
        });
    }
    let mut rng = rng_from_seed(seed);

    let h_interaction = demo.frames[window.t_interaction].hand + gauss3(&mut rng, cfg.sigma_wp);
    let span = window.t_end - window.t_interaction;
    let mut h_mid = Vec::with_capacity(cfg.mid_fractions.len());
    for frac in &cfg.mid_fractions {
        let t_mid = window.t_interaction + ((*frac) * span as f64).round() as usize;
        h_mid.push(demo.frames[t_mid.min(t_len - 1)].hand + gauss3(&mut rng, cfg.sigma_wp));
    }
    let h_end = demo.frames[window.t_end].hand + gauss3(&mut rng, cfg.sigma_wp);

    let theta_hand = circular_mean(
        demo.frames[window.t_interaction..=window.t_end]
            .iter()
            .map(|f| f.wrist),
    );
    let grasp_commands: Vec<bool> = (0..t_len)
        .map(|t| t >= window.t_interaction && t <= window.t_end)
        .collect();

    Ok(HandPrior {
        h_interaction,
        h_mid,
        h_end,
        theta_hand,
        grasp_commands,
        window: window.clone(),
    })
}

/// Map camera-frame hand quantities into a robot-frame action: deproject
/// each hand point with its depth and apply the camera-to-robot extrinsic;
/// remap the wrist with the robot-specific heuristic (identity here); close
/// the gripper fully if any close command is set; normalize the window
/// endpoints by the demo length to get the schedule fractions.
pub fn f_map(hand: &HandPrior, camera: &CameraModel) -> Result<Prior, PriorError> {
    let map_point = |p: Vec3| -> Result<Vec3, PriorError> {
        if p.z <= 0.0 {
            return Err(PriorError::PointBehindCamera);
        }
        let (u, v) = camera.project(p);
        if !camera.in_frustum(u, v) {
            return Err(PriorError::OutsideFrustum { u, v });
        }
        let cam_point = camera.deproject(u, v, p.z);
        Ok(camera.to_robot(cam_point))
    };

    let w_interaction = map_point(hand.h_interaction)?;
    let w_mid = hand.h_mid.iter().map(|p| map_point(*p)).collect::<Result<Vec<_>, _>>()?;
    let w_end = map_point(hand.h_end)?;

    let any_closed = hand.grasp_commands.iter().any(|o| *o);
    let t_len = hand.grasp_commands.len() as f64;
    Ok(Prior {
        w_interaction,
        w_mid,
        w_end,
        wrist_ypr: hand.theta_hand,
        grip: if any_closed { 0.0 } else { 1.0 },
        schedule: Schedule {
            close_frac: hand.window.t_interaction as f64 / t_len,
            open_frac: hand.window.t_end as f64 / t_len,
        },
    })
}

/// Full pipeline: smooth contacts, detect the interaction window, sample the
/// hand prior and map it into the robot frame.
pub fn extract_prior(
    demo: &DemoVideo,
    camera: &CameraModel,
    cfg: &PriorConfig,
    seed: u64,
) -> Result<Prior, PriorError> {
    let smoothed = crate::prior::smooth_contacts(&demo.contacts(), cfg.savgol_window, cfg.savgol_polyorder)?;
    let window = crate::prior::detect_window(&smoothed, cfg.min_run_len)?;
    let hand = extract_hand_prior(demo, &window, cfg, seed)?;
    f_map(&hand, camera)
}
