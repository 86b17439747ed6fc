//! Prior extraction: contact smoothing, interaction-window detection,
//! waypoint sampling, and the hand-to-robot action mapping.

pub mod contacts;
pub mod extract;
pub mod savgol;

pub use contacts::{count_transitions, detect_window, smooth_contacts};
pub use extract::{extract_hand_prior, extract_prior, f_map, HandPrior};
pub use savgol::{filter_mirrored, savgol_coefficients};

use crate::demo::ContactClass;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PriorError {
    #[error("invalid Savitzky-Golay parameters: window {window}, polyorder {polyorder}")]
    InvalidSavgolParams { window: usize, polyorder: usize },
    #[error("sequence of length {len} is shorter than the filter window {window}")]
    SequenceTooShort { len: usize, window: usize },
    #[error("no interaction detected")]
    NoInteraction,
    #[error("invalid interaction window [{t_interaction}, {t_end}] for length {len}")]
    InvalidWindow { t_interaction: usize, t_end: usize, len: usize },
    #[error("hand point behind the camera")]
    PointBehindCamera,
    #[error("hand point projects outside the frustum at ({u:.1}, {v:.1})")]
    OutsideFrustum { u: f64, v: f64 },
}

/// Contiguous interval of frames during which the hand holds the target.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InteractionWindow {
    pub t_interaction: usize,
    pub t_end: usize,
    pub segment_contact: ContactClass,
}

/// Extraction knobs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PriorConfig {
    pub savgol_window: usize,
    pub savgol_polyorder: usize,
    /// Contact runs shorter than this are ignored by window detection.
    pub min_run_len: usize,
    /// Std of the Gaussian spread applied to sampled waypoints (m).
    pub sigma_wp: f64,
    /// Interior fractions of the window at which midpoints are sampled.
    pub mid_fractions: Vec<f64>,
}

impl Default for PriorConfig {
    fn default() -> Self {
        PriorConfig {
            savgol_window: 7,
            savgol_polyorder: 2,
            min_run_len: 5,
            sigma_wp: 0.01,
            mid_fractions: vec![0.5],
        }
    }
}
