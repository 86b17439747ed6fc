//! Scripted expert demonstrations.
//!
//! The expert runs the same kinematic simulator at the same step size as
//! robot rollouts, so demonstration timelines and rollout plans share their
//! proportions. Hand detections are the end-effector pose projected into the
//! camera frame.

use crate::demo::{ContactClass, DemoError, DemoVideo, HandFrame};
use crate::math::Vec3;
use crate::sim::scene::{GoalSpec, Scene};
use crate::sim::state::{EndEffectorState, EnvState};
use crate::sim::step::{reset, step};
use crate::sim::{StepConfig};

/// Apparent hand half-width in meters for the synthetic bounding box.
pub(crate) const HAND_HALF_SIZE_M: f64 = 0.05;
/// Frames the hand keeps holding after the goal completes, before release;
/// gives the mapped open schedule slack on the robot side.
const HOLD_FRAMES: usize = 4;
/// Retreat frames appended after release. Close + hold + release + retreat
/// matches StepConfig::tail_frames so schedule fractions transfer from demo
/// to rollout timelines.
const RETREAT_FRAMES: usize = 12;
const PHASE_STEP_BUDGET: usize = 400;

struct Recorder {
    scene_ref: String,
    frames: Vec<HandFrame>,
    env_truth: Vec<crate::sim::EnvSnapshot>,
}

impl Recorder {
    fn record(&mut self, scene: &Scene, state: &EnvState) {
        let contact = match state.attachment {
            Some(crate::sim::Attachment::JointHandle { .. }) => ContactClass::Fixed,
            Some(crate::sim::Attachment::FreeObject { .. }) => ContactClass::Portable,
            None => ContactClass::None,
        };
        let hand_cam = scene.camera.to_camera(state.ee.position);
        let (u, v) = scene.camera.project(hand_cam);
        let half_u = scene.camera.fx * HAND_HALF_SIZE_M / hand_cam.z;
        let half_v = scene.camera.fy * HAND_HALF_SIZE_M / hand_cam.z;
        self.frames.push(HandFrame {
            hand: hand_cam,
            bbox: [u - half_u, v - half_v, u + half_u, v + half_v],
            wrist: state.ee.ypr,
            contact,
            depth: hand_cam.z,
        });
        self.env_truth.push(state.env_snapshot());
    }
}

/// Drive the ee toward a target pose until arrival or stall; records every
/// step. Returns the final state.
fn move_to(
    scene: &Scene,
    cfg: &StepConfig,
    rec: &mut Recorder,
    mut state: EnvState,
    position: Vec3,
    ypr: Vec3,
    aperture: f64,
) -> EnvState {
    let mut prev_remaining = f64::INFINITY;
    for _ in 0..PHASE_STEP_BUDGET {
        let target = EndEffectorState::new(position, ypr, aperture);
        let next = step(scene, &state, &target, cfg);
        rec.record(scene, &next);
        let remaining = next.ee.position.dist(position);
        state = next;
        if remaining < cfg.reach_eps || prev_remaining - remaining < cfg.stall_eps {
            break;
        }
        prev_remaining = remaining;
    }
    state
}

/// Generate a noiseless demonstration for a scene: approach the handle or
/// object, grasp it for a contiguous interval, complete the goal, release
/// and retreat. Returns the demo and its goal-success flag.
pub fn scripted_expert(scene: &Scene, seed: u64) -> Result<(DemoVideo, bool), DemoError> {
    let cfg = StepConfig::default();
    scripted_expert_with(scene, seed, &cfg)
}

pub fn scripted_expert_with(
    scene: &Scene,
    seed: u64,
    cfg: &StepConfig,
) -> Result<(DemoVideo, bool), DemoError> {
    let mut rec = Recorder {
        scene_ref: scene.name.clone(),
        frames: Vec::new(),
        env_truth: Vec::new(),
    };
    let mut state = reset(scene, seed)?;
    let wrist = scene.home.ypr;

    match scene.goal.clone() {
        GoalSpec::JointTarget { joint_index, target_value, .. } => {
            let spec = &scene.joints[joint_index];
            let grasp_point = spec.handle_position(spec.initial_value);

            // Approach with the gripper open.
            state = move_to(scene, cfg, &mut rec, state, grasp_point, wrist, 1.0);
            if state.ee.position.dist(grasp_point) > cfg.grasp_radius {
                return Err(DemoError::UnreachableGoal(format!(
                    "approach stalled {:.3} m from the handle",
                    state.ee.position.dist(grasp_point)
                )));
            }

            // Close in place; the grasp forms this step.
            let target = EndEffectorState::new(state.ee.position, wrist, 0.0);
            state = step(scene, &state, &target, cfg);
            rec.record(scene, &state);
            if state.attachment.is_none() {
                return Err(DemoError::UnreachableGoal("grasp did not form".into()));
            }

            // Follow the joint manifold to the target value.
            let radius_step = match spec.kind {
                crate::sim::JointKind::Prismatic => cfg.max_step_pos,
                crate::sim::JointKind::Revolute => {
                    let rel = spec.handle_position(spec.initial_value) - spec.origin;
                    let radial = rel - spec.axis * rel.dot(spec.axis);
                    cfg.max_step_pos / radial.norm().max(1e-6)
                }
            };
            for _ in 0..PHASE_STEP_BUDGET {
                let q = state.joint_values[joint_index];
                if (q - target_value).abs() < 1e-9 {
                    break;
                }
                let dq = (target_value - q).clamp(-radius_step, radius_step);
                let next_handle = scene.joints[joint_index].handle_position(q + dq);
                let target = EndEffectorState::new(next_handle, wrist, 0.0);
                let next = step(scene, &state, &target, cfg);
                rec.record(scene, &next);
                if (next.joint_values[joint_index] - q).abs() < 1e-12 {
                    state = next;
                    break;
                }
                state = next;
            }
            if (state.joint_values[joint_index] - target_value).abs() > cfg.max_step_pos {
                return Err(DemoError::UnreachableGoal(format!(
                    "joint stalled at {:.3}, target {:.3}",
                    state.joint_values[joint_index], target_value
                )));
            }
        }
        GoalSpec::ObjectInRegion { object_index, region, .. } => {
            let grasp_point = scene.free_objects[object_index].position;
            state = move_to(scene, cfg, &mut rec, state, grasp_point, wrist, 1.0);
            if state.ee.position.dist(grasp_point) > scene.free_objects[object_index].grasp_radius {
                return Err(DemoError::UnreachableGoal("approach stalled short of the object".into()));
            }
            let target = EndEffectorState::new(state.ee.position, wrist, 0.0);
            state = step(scene, &state, &target, cfg);
            rec.record(scene, &state);
            if state.attachment.is_none() {
                return Err(DemoError::UnreachableGoal("grasp did not form".into()));
            }

            // Carry along the declared safe route, then into the region.
            let center = (region.min + region.max) * 0.5;
            let mut carry_targets = scene.expert_route.clone();
            carry_targets.push(center);
            for wp in carry_targets {
                state = move_to(scene, cfg, &mut rec, state, wp, wrist, 0.0);
            }
            if state.stuck {
                return Err(DemoError::UnreachableGoal("expert route hit an obstacle".into()));
            }
        }
    }

    // Hold in place briefly, release, then retreat toward home.
    for _ in 0..HOLD_FRAMES {
        let target = EndEffectorState::new(state.ee.position, wrist, 0.0);
        state = step(scene, &state, &target, cfg);
        rec.record(scene, &state);
    }
    let target = EndEffectorState::new(state.ee.position, wrist, 1.0);
    state = step(scene, &state, &target, cfg);
    rec.record(scene, &state);

    let retreat_dir = (scene.home.position - state.ee.position).normalized();
    let retreat_point = state.ee.position + retreat_dir * (RETREAT_FRAMES as f64 * cfg.max_step_pos);
    for _ in 0..RETREAT_FRAMES - 1 {
        let target = EndEffectorState::new(retreat_point, wrist, 1.0);
        state = step(scene, &state, &target, cfg);
        rec.record(scene, &state);
    }

    let achieved = match &scene.goal {
        GoalSpec::JointTarget { joint_index, target_value, success_tolerance } => {
            (state.joint_values[*joint_index] - target_value).abs() <= *success_tolerance
        }
        GoalSpec::ObjectInRegion { object_index, region, .. } => {
            region.contains(state.object_poses[*object_index].position)
        }
    };

    let demo = DemoVideo {
        scene_ref: rec.scene_ref,
        frames: rec.frames,
        env_truth: rec.env_truth,
    };
    demo.validate()?;
    Ok((demo, achieved))
}
