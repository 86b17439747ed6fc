//! Kinematic stepping: reset, single-step transition, grasp and release.

use crate::math::{step_toward, Vec3};
use crate::sim::scene::{JointKind, Scene};
use crate::sim::state::{Attachment, EndEffectorState, EnvState};
use crate::sim::{SimError, StepConfig};

/// Initial state for a scene. Deterministic for a fixed (scene, seed); the
/// seed is part of the interface for forward compatibility but the reset
/// itself is noise-free.
pub fn reset(scene: &Scene, _seed: u64) -> Result<EnvState, SimError> {
    scene.validate()?;
    Ok(EnvState {
        joint_values: scene.joints.iter().map(|j| j.initial_value).collect(),
        object_poses: scene.initial_object_poses(),
        attachment: None,
        ee: EndEffectorState::new(scene.home.position, scene.home.ypr, 1.0),
        time_index: 0,
        stuck: false,
    })
}

/// Advance the world by one step toward an end-effector target.
///
/// Order per step: aperture update, release check, motion (free, joint-
/// constrained, or carrying), obstacle check, then grasp check. All inputs
/// are clamped; the transition never fails.
pub fn step(scene: &Scene, state: &EnvState, target: &EndEffectorState, cfg: &StepConfig) -> EnvState {
    let mut next = state.clone();
    next.time_index = state.time_index.saturating_add(1);

    // Aperture switches within one step; wrist rotation is rate-limited.
    next.ee.aperture = target.aperture.clamp(0.0, 1.0);
    next.ee.ypr = Vec3::new(
        step_toward(state.ee.ypr.x, target.ypr.x, cfg.max_step_rot),
        step_toward(state.ee.ypr.y, target.ypr.y, cfg.max_step_rot),
        step_toward(state.ee.ypr.z, target.ypr.z, cfg.max_step_rot),
    );

    if next.ee.aperture > cfg.open_threshold {
        next.attachment = None;
    }

    if !next.stuck {
        let desired = (target.position - state.ee.position).clamp_norm(cfg.max_step_pos);
        match next.attachment {
            Some(Attachment::JointHandle { joint, grip_offset }) => {
                let spec = &scene.joints[joint];
                let q = next.joint_values[joint];
                let dq = match spec.kind {
                    JointKind::Prismatic => desired.dot(spec.axis),
                    JointKind::Revolute => {
                        let handle = spec.handle_position(q);
                        let rel = handle - spec.origin;
                        let radial = rel - spec.axis * rel.dot(spec.axis);
                        let radius = radial.norm();
                        if radius < 1e-9 {
                            0.0
                        } else {
                            let tangent = spec.axis.cross(radial.normalized());
                            desired.dot(tangent) / radius
                        }
                    }
                };
                let q_new = spec.clamp(q + dq);
                next.joint_values[joint] = q_new;
                next.ee.position = spec.handle_position(q_new) + grip_offset;
            }
            Some(Attachment::FreeObject { object, grip_offset }) => {
                let new_pos = state.ee.position + desired;
                if hits_obstacle(scene, state.ee.position, new_pos) {
                    next.stuck = true;
                } else {
                    next.ee.position = new_pos;
                    next.object_poses[object].position = new_pos + grip_offset;
                }
            }
            None => {
                let new_pos = state.ee.position + desired;
                if hits_obstacle(scene, state.ee.position, new_pos) {
                    next.stuck = true;
                } else {
                    next.ee.position = new_pos;
                }
            }
        }
    }

    if next.attachment.is_none() && next.ee.aperture < cfg.close_threshold {
        next.attachment = find_grasp(scene, &next, cfg);
    }

    next
}

/// Nearest graspable handle or object within reach, if any.
fn find_grasp(scene: &Scene, state: &EnvState, cfg: &StepConfig) -> Option<Attachment> {
    let ee = state.ee.position;
    let mut best: Option<(f64, Attachment)> = None;
    for (i, spec) in scene.joints.iter().enumerate() {
        let handle = spec.handle_position(state.joint_values[i]);
        let d = ee.dist(handle);
        if d < cfg.grasp_radius && best.as_ref().map_or(true, |(bd, _)| d < *bd) {
            best = Some((d, Attachment::JointHandle { joint: i, grip_offset: ee - handle }));
        }
    }
    for (i, spec) in scene.free_objects.iter().enumerate() {
        let pos = state.object_poses[i].position;
        let d = ee.dist(pos);
        if d < spec.grasp_radius && best.as_ref().map_or(true, |(bd, _)| d < *bd) {
            best = Some((d, Attachment::FreeObject { object: i, grip_offset: pos - ee }));
        }
    }
    best.map(|(_, a)| a)
}

fn hits_obstacle(scene: &Scene, from: Vec3, to: Vec3) -> bool {
    scene.obstacles.iter().any(|slab| slab.intersects_segment(from, to))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::Aabb;
    use crate::sim::testutil::drawer_scene;

    fn attach_to_handle(scene: &Scene, cfg: &StepConfig) -> EnvState {
        let mut state = reset(scene, 0).unwrap();
        state.ee.position = scene.joints[0].handle_position(0.0);
        let target = EndEffectorState::new(state.ee.position, Vec3::ZERO, 0.0);
        state = step(scene, &state, &target, cfg);
        assert!(matches!(state.attachment, Some(Attachment::JointHandle { .. })));
        state
    }

    #[test]
    fn reset_is_deterministic_and_initial() {
        let scene = drawer_scene();
        let a = reset(&scene, 0).unwrap();
        let b = reset(&scene, 0).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.joint_values[0], 0.0);
        assert!(a.attachment.is_none());
    }

    #[test]
    fn reset_rejects_invalid_scene() {
        let mut scene = drawer_scene();
        scene.joints[0].initial_value = 5.0;
        assert!(reset(&scene, 0).is_err());
    }

    #[test]
    fn prismatic_motion_along_axis_is_identity_projection() {
        let scene = drawer_scene();
        let cfg = StepConfig::default();
        let state = attach_to_handle(&scene, &cfg);
        // Pull exactly 0.02 m along the joint axis (-x).
        let target = EndEffectorState::new(
            state.ee.position + Vec3::new(-0.02, 0.0, 0.0),
            Vec3::ZERO,
            0.0,
        );
        let next = step(&scene, &state, &target, &cfg);
        assert!((next.joint_values[0] - 0.02).abs() < 1e-15);
    }

    #[test]
    fn orthogonal_motion_leaves_joint_unchanged() {
        let scene = drawer_scene();
        let cfg = StepConfig::default();
        let state = attach_to_handle(&scene, &cfg);
        let target = EndEffectorState::new(
            state.ee.position + Vec3::new(0.0, 0.02, 0.0),
            Vec3::ZERO,
            0.0,
        );
        let next = step(&scene, &state, &target, &cfg);
        assert_eq!(next.joint_values[0], state.joint_values[0]);
    }

    #[test]
    fn far_open_gripper_leaves_environment_unchanged() {
        let scene = drawer_scene();
        let cfg = StepConfig::default();
        let state = reset(&scene, 0).unwrap();
        let target = EndEffectorState::new(Vec3::new(0.12, 0.0, 0.5), Vec3::ZERO, 1.0);
        let next = step(&scene, &state, &target, &cfg);
        assert_eq!(next.joint_values, state.joint_values);
        assert!(next.attachment.is_none());
    }

    #[test]
    fn opening_wide_releases_attachment() {
        let scene = drawer_scene();
        let cfg = StepConfig::default();
        let state = attach_to_handle(&scene, &cfg);
        let target = EndEffectorState::new(state.ee.position, Vec3::ZERO, 1.0);
        let next = step(&scene, &state, &target, &cfg);
        assert!(next.attachment.is_none());
    }

    #[test]
    fn obstacle_freezes_ee() {
        let mut scene = drawer_scene();
        scene.obstacles.push(Aabb {
            min: Vec3::new(0.3, -1.0, 0.0),
            max: Vec3::new(0.35, 1.0, 1.0),
        });
        let cfg = StepConfig::default();
        let mut state = reset(&scene, 0).unwrap();
        state.ee.position = Vec3::new(0.29, 0.0, 0.5);
        let target = EndEffectorState::new(Vec3::new(0.4, 0.0, 0.5), Vec3::ZERO, 1.0);
        let next = step(&scene, &state, &target, &cfg);
        assert!(next.stuck);
        assert_eq!(next.ee.position, state.ee.position);
        // Once stuck, further targets do not move the ee.
        let after = step(&scene, &next, &target, &cfg);
        assert_eq!(after.ee.position, state.ee.position);
    }
}
