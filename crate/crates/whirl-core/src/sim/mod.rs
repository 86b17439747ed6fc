//! Deterministic kinematic simulation of manipulation scenes.
//!
//! Scenes hold articulated joints (drawers, doors, dishwasher baskets) and
//! free objects; the gripper snap-attaches within a grasp radius and joint
//! motion follows the projected end-effector displacement. All operations
//! are pure functions of their inputs and safe to call concurrently.

pub mod rollout;
pub mod scene;
pub mod state;
pub mod step;

pub use rollout::{rollout, success, Rollout};
pub use scene::{CameraModel, FreeObjectSpec, GoalSpec, HomePose, JointKind, JointSpec, Scene};
pub use state::{Attachment, EndEffectorState, EnvSnapshot, EnvState};
pub use step::{reset, step};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid scene: {0}")]
    InvalidScene(String),
    #[error("goal references out-of-range index {index}")]
    GoalIndexOutOfRange { index: usize },
}

/// Stepping and rollout knobs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StepConfig {
    /// Maximum end-effector translation per step (m).
    pub max_step_pos: f64,
    /// Maximum wrist rotation per step per component (rad).
    pub max_step_rot: f64,
    /// Aperture below which a grasp can form.
    pub close_threshold: f64,
    /// Aperture above which a grasp releases.
    pub open_threshold: f64,
    /// Snap-attach distance for joint handles (m). Free objects carry their
    /// own radius.
    pub grasp_radius: f64,
    /// Maximum rollout steps.
    pub horizon: usize,
    /// Pass-through radius for waypoint advancement during rollouts.
    pub advance_radius: f64,
    /// Exact-arrival distance used by scripted phase controllers.
    pub reach_eps: f64,
    /// Progress-per-step below which a waypoint is considered stalled;
    /// a tenth of the step size counts residual creep as a stall.
    pub stall_eps: f64,
    /// Settle frames appended to the planned timeline after the last
    /// waypoint; sized to match the demonstrator's retreat so schedule
    /// fractions transfer between demo and robot timelines.
    pub tail_frames: usize,
}

impl Default for StepConfig {
    fn default() -> Self {
        StepConfig {
            max_step_pos: 0.02,
            max_step_rot: 0.05,
            close_threshold: 0.3,
            open_threshold: 0.7,
            grasp_radius: 0.065,
            horizon: 300,
            advance_radius: 0.02,
            reach_eps: 1e-6,
            stall_eps: 0.002,
            tail_frames: 18,
        }
    }
}

#[cfg(test)]
pub(crate) mod testutil {
    use super::scene::{CameraModel, GoalSpec, HomePose, JointKind, JointSpec, Scene};
    use crate::math::{Mat3, Vec3};

    pub(crate) fn drawer_scene() -> Scene {
        Scene {
            name: "unit_drawer".into(),
            home: HomePose { position: Vec3::new(0.1, 0.0, 0.5), ypr: Vec3::ZERO },
            joints: vec![JointSpec {
                kind: JointKind::Prismatic,
                axis: Vec3::new(-1.0, 0.0, 0.0),
                origin: Vec3::new(0.55, 0.05, 0.45),
                limits: [0.0, 0.3],
                handle_offset: Vec3::ZERO,
                initial_value: 0.0,
            }],
            free_objects: vec![],
            obstacles: vec![],
            camera: CameraModel {
                rotation: Mat3 { rows: [[0.0, 0.0, 1.0], [-1.0, 0.0, 0.0], [0.0, -1.0, 0.0]] },
                translation: Vec3::new(-1.2, 0.0, 0.6),
                fx: 600.0,
                fy: 600.0,
                cx: 320.0,
                cy: 240.0,
                width: 640.0,
                height: 480.0,
            },
            goal: GoalSpec::JointTarget { joint_index: 0, target_value: 0.22, success_tolerance: 0.04 },
            expert_route: vec![],
        }
    }
}
