//! Environment and end-effector state.

use crate::math::{Pose, Vec3};
use serde::{Deserialize, Serialize};

/// Gripper pose plus aperture. Aperture 1 is fully open, 0 fully closed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EndEffectorState {
    pub position: Vec3,
    pub ypr: Vec3,
    pub aperture: f64,
}

impl EndEffectorState {
    pub fn new(position: Vec3, ypr: Vec3, aperture: f64) -> Self {
        EndEffectorState { position, ypr, aperture: aperture.clamp(0.0, 1.0) }
    }
}

/// What the gripper is currently holding.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Attachment {
    /// Holding a joint handle; `grip_offset` is ee position minus handle
    /// position at the step the grasp formed.
    JointHandle { joint: usize, grip_offset: Vec3 },
    /// Carrying a free object; `grip_offset` is object position minus ee
    /// position at the step the grasp formed.
    FreeObject { object: usize, grip_offset: Vec3 },
}

/// Environment-only snapshot: joint values and object poses, no agent state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvSnapshot {
    pub joint_values: Vec<f64>,
    pub object_poses: Vec<Pose>,
}

impl EnvSnapshot {
    /// Flatten into the environment feature vector: joints then object poses.
    pub fn features(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.joint_values.len() + 6 * self.object_poses.len());
        out.extend_from_slice(&self.joint_values);
        for p in &self.object_poses {
            out.extend_from_slice(&p.position.to_array());
            out.extend_from_slice(&p.ypr.to_array());
        }
        out
    }
}

/// Full world state at one simulation step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvState {
    pub joint_values: Vec<f64>,
    pub object_poses: Vec<Pose>,
    pub attachment: Option<Attachment>,
    pub ee: EndEffectorState,
    pub time_index: u32,
    /// Set once the ee has collided with an obstacle; it stays frozen after.
    pub stuck: bool,
}

impl EnvState {
    pub fn env_snapshot(&self) -> EnvSnapshot {
        EnvSnapshot {
            joint_values: self.joint_values.clone(),
            object_poses: self.object_poses.clone(),
        }
    }
}
