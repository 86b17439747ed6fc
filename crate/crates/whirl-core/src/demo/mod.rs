//! Synthetic "human demonstration videos": per-frame hand pose, wrist
//! rotation, contact class and depth, produced by a scripted expert in the
//! simulator and corrupted with configurable detection noise.

pub mod corrupt;
pub mod expert;
pub mod io;

pub use corrupt::corrupt;
pub use expert::scripted_expert;

use crate::math::Vec3;
use crate::sim::EnvSnapshot;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DemoError {
    #[error("scripted expert could not reach the goal: {0}")]
    UnreachableGoal(String),
    #[error("demonstration too short: {0} frames")]
    TooShort(usize),
    #[error("simulation error: {0}")]
    Sim(#[from] crate::sim::SimError),
    #[error("malformed demo record: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Per-frame contact class as a hand-object detector would report it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContactClass {
    None,
    Portable,
    Fixed,
    SelfContact,
}

impl ContactClass {
    pub const COUNT: usize = 4;

    pub fn index(self) -> usize {
        match self {
            ContactClass::None => 0,
            ContactClass::Portable => 1,
            ContactClass::Fixed => 2,
            ContactClass::SelfContact => 3,
        }
    }

    pub fn from_index(i: usize) -> Option<ContactClass> {
        match i {
            0 => Some(ContactClass::None),
            1 => Some(ContactClass::Portable),
            2 => Some(ContactClass::Fixed),
            3 => Some(ContactClass::SelfContact),
            _ => None,
        }
    }

    pub fn is_contact(self) -> bool {
        self != ContactClass::None
    }
}

/// One detected frame of the demonstration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HandFrame {
    /// Hand position in the camera frame (m).
    pub hand: Vec3,
    /// Pixel bounding box [u_min, v_min, u_max, v_max].
    pub bbox: [f64; 4],
    /// Wrist rotation, yaw-pitch-roll (rad).
    pub wrist: Vec3,
    pub contact: ContactClass,
    /// Depth at the hand pixel (m).
    pub depth: f64,
}

/// A full demonstration: detections per frame plus the ground-truth
/// environment evolution. `env_truth` exists for the alignment module's
/// demo-side embedding only; prior extraction never reads it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemoVideo {
    pub scene_ref: String,
    pub frames: Vec<HandFrame>,
    pub env_truth: Vec<EnvSnapshot>,
}

impl DemoVideo {
    pub const MIN_LEN: usize = 10;

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn validate(&self) -> Result<(), DemoError> {
        if self.frames.len() < Self::MIN_LEN {
            return Err(DemoError::TooShort(self.frames.len()));
        }
        if self.env_truth.len() != self.frames.len() {
            return Err(DemoError::Parse(format!(
                "env_truth length {} != frames length {}",
                self.env_truth.len(),
                self.frames.len()
            )));
        }
        Ok(())
    }

    pub fn contacts(&self) -> Vec<ContactClass> {
        self.frames.iter().map(|f| f.contact).collect()
    }
}

/// Detection-noise model applied to clean expert traces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseConfig {
    /// Std of Gaussian noise on the camera-frame hand position (m).
    pub pos_sigma: f64,
    /// Std of a per-demonstration constant offset on the hand position (m):
    /// the calibration-style bias that makes one video's detections
    /// systematically wrong.
    pub bias_sigma: f64,
    /// Per-frame probability of flipping the contact class to a uniformly
    /// chosen other class.
    pub contact_flip_prob: f64,
    /// Std of Gaussian noise on the wrist rotation (rad).
    pub wrist_sigma: f64,
    /// Multiplicative length interval for time resampling.
    pub time_warp_range: [f64; 2],
    /// Per-frame drop probability. The output never drops below 10 frames.
    pub dropout_prob: f64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        NoiseConfig {
            pos_sigma: 0.02,
            bias_sigma: 0.025,
            contact_flip_prob: 0.05,
            wrist_sigma: 0.1,
            time_warp_range: [0.85, 1.2],
            dropout_prob: 0.02,
        }
    }
}

impl NoiseConfig {
    /// Identity noise: corrupt() returns its input unchanged.
    pub fn zero() -> Self {
        NoiseConfig {
            pos_sigma: 0.0,
            bias_sigma: 0.0,
            contact_flip_prob: 0.0,
            wrist_sigma: 0.0,
            time_warp_range: [1.0, 1.0],
            dropout_prob: 0.0,
        }
    }

    pub fn validate(&self) -> Result<(), DemoError> {
        let prob_ok = |p: f64| (0.0..=1.0).contains(&p);
        if !prob_ok(self.contact_flip_prob) || !prob_ok(self.dropout_prob) {
            return Err(DemoError::Parse("probabilities must lie in [0,1]".into()));
        }
        if self.pos_sigma < 0.0 || self.bias_sigma < 0.0 || self.wrist_sigma < 0.0 {
            return Err(DemoError::Parse("sigmas must be non-negative".into()));
        }
        if self.time_warp_range[0] <= 0.0 || self.time_warp_range[0] > self.time_warp_range[1] {
            return Err(DemoError::Parse("invalid time warp range".into()));
        }
        Ok(())
    }
}
