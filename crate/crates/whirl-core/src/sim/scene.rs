//! Scene description: articulated joints, free objects, camera, goal.
//!
//! Scenes load from TOML files; the four benchmark tasks ship as checked-in
//! configs under `configs/scenes/`.

use crate::math::{Aabb, Mat3, Pose, Vec3};
use crate::sim::SimError;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JointKind {
    Prismatic,
    Revolute,
}

/// One articulated degree of freedom with a graspable handle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointSpec {
    pub kind: JointKind,
    /// Unit motion axis: translation direction (prismatic) or rotation axis (revolute).
    pub axis: Vec3,
    /// Joint frame origin in the robot frame. Revolute handles orbit this point.
    #[serde(default)]
    pub origin: Vec3,
    /// Closed interval of admissible joint values (m or rad).
    pub limits: [f64; 2],
    /// Offset from the joint frame to the handle, expressed at joint value 0.
    pub handle_offset: Vec3,
    pub initial_value: f64,
}

impl JointSpec {
    /// Handle position in the robot frame at joint value `q`.
    pub fn handle_position(&self, q: f64) -> Vec3 {
        match self.kind {
            JointKind::Prismatic => self.origin + self.handle_offset + self.axis * q,
            JointKind::Revolute => self.origin + self.handle_offset.rotated_about(self.axis, q),
        }
    }

    pub fn clamp(&self, q: f64) -> f64 {
        q.max(self.limits[0]).min(self.limits[1])
    }

    fn validate(&self, idx: usize) -> Result<(), SimError> {
        if (self.axis.norm() - 1.0).abs() > 1e-9 {
            return Err(SimError::InvalidScene(format!(
                "joint {idx}: axis norm {} is not 1",
                self.axis.norm()
            )));
        }
        if self.limits[0] > self.limits[1] {
            return Err(SimError::InvalidScene(format!("joint {idx}: empty limits")));
        }
        if self.initial_value < self.limits[0] || self.initial_value > self.limits[1] {
            return Err(SimError::InvalidScene(format!(
                "joint {idx}: initial_value {} outside limits",
                self.initial_value
            )));
        }
        Ok(())
    }
}

/// A rigid object that can be grasped and carried.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FreeObjectSpec {
    pub position: Vec3,
    #[serde(default)]
    pub ypr: Vec3,
    pub grasp_radius: f64,
}

/// Pinhole camera with a camera-to-robot rigid transform.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CameraModel {
    /// Rotation mapping camera-frame vectors into the robot frame.
    pub rotation: Mat3,
    /// Camera origin in the robot frame.
    pub translation: Vec3,
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: f64,
    pub height: f64,
}

impl CameraModel {
    pub fn to_camera(&self, p_robot: Vec3) -> Vec3 {
        self.rotation.transpose().mul_vec(p_robot - self.translation)
    }

    pub fn to_robot(&self, p_camera: Vec3) -> Vec3 {
        self.rotation.mul_vec(p_camera) + self.translation
    }

    /// Project a camera-frame point to pixel coordinates. Requires z > 0.
    pub fn project(&self, p_camera: Vec3) -> (f64, f64) {
        (
            self.fx * p_camera.x / p_camera.z + self.cx,
            self.fy * p_camera.y / p_camera.z + self.cy,
        )
    }

    /// Lift a pixel with known depth back to a camera-frame point.
    pub fn deproject(&self, u: f64, v: f64, depth: f64) -> Vec3 {
        Vec3::new((u - self.cx) / self.fx * depth, (v - self.cy) / self.fy * depth, depth)
    }

    pub fn in_frustum(&self, u: f64, v: f64) -> bool {
        u >= 0.0 && u <= self.width && v >= 0.0 && v <= self.height
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GoalSpec {
    /// Drive a joint to a target value within a tolerance.
    JointTarget {
        joint_index: usize,
        target_value: f64,
        success_tolerance: f64,
    },
    /// Place a free object's center inside a region.
    ObjectInRegion {
        object_index: usize,
        region: Aabb,
        success_tolerance: f64,
    },
}

impl GoalSpec {
    pub fn success_tolerance(&self) -> f64 {
        match self {
            GoalSpec::JointTarget { success_tolerance, .. } => *success_tolerance,
            GoalSpec::ObjectInRegion { success_tolerance, .. } => *success_tolerance,
        }
    }
}

/// Initial end-effector pose used by `reset`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HomePose {
    pub position: Vec3,
    #[serde(default)]
    pub ypr: Vec3,
}

/// Full scene description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub name: String,
    pub home: HomePose,
    #[serde(default)]
    pub joints: Vec<JointSpec>,
    #[serde(default)]
    pub free_objects: Vec<FreeObjectSpec>,
    /// Solid slabs the end effector must not cross (shelf boards). Hitting one
    /// freezes the end effector for the rest of the episode.
    #[serde(default)]
    pub obstacles: Vec<Aabb>,
    pub camera: CameraModel,
    pub goal: GoalSpec,
    /// Safe carry route for the scripted demonstrator on pick-and-place
    /// scenes, visited between grasp and the goal region.
    #[serde(default)]
    pub expert_route: Vec<Vec3>,
}

impl Scene {
    pub fn validate(&self) -> Result<(), SimError> {
        for (i, j) in self.joints.iter().enumerate() {
            j.validate(i)?;
        }
        for (i, o) in self.free_objects.iter().enumerate() {
            if o.grasp_radius <= 0.0 {
                return Err(SimError::InvalidScene(format!("object {i}: non-positive grasp radius")));
            }
        }
        if (self.camera.rotation.det() - 1.0).abs() > 1e-9 {
            return Err(SimError::InvalidScene(format!(
                "camera rotation determinant {} is not 1",
                self.camera.rotation.det()
            )));
        }
        match &self.goal {
            GoalSpec::JointTarget { joint_index, success_tolerance, .. } => {
                if *joint_index >= self.joints.len() {
                    return Err(SimError::GoalIndexOutOfRange { index: *joint_index });
                }
                if *success_tolerance <= 0.0 {
                    return Err(SimError::InvalidScene("non-positive success tolerance".into()));
                }
            }
            GoalSpec::ObjectInRegion { object_index, success_tolerance, .. } => {
                if *object_index >= self.free_objects.len() {
                    return Err(SimError::GoalIndexOutOfRange { index: *object_index });
                }
                if *success_tolerance <= 0.0 {
                    return Err(SimError::InvalidScene("non-positive success tolerance".into()));
                }
            }
        }
        Ok(())
    }

    pub fn from_toml(text: &str) -> Result<Scene, SimError> {
        let scene: Scene =
            toml::from_str(text).map_err(|e| SimError::InvalidScene(format!("parse error: {e}")))?;
        scene.validate()?;
        Ok(scene)
    }

    pub fn initial_object_poses(&self) -> Vec<Pose> {
        self.free_objects.iter().map(|o| Pose::new(o.position, o.ypr)).collect()
    }

    /// Feature dimension of the environment-only state: one value per joint
    /// plus a 6-dof pose per free object.
    pub fn env_feature_dim(&self) -> usize {
        self.joints.len() + 6 * self.free_objects.len()
    }
}
