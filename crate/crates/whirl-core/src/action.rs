//! Robot-frame action parameterization: waypoints, wrist, gripper, schedule.

use crate::math::Vec3;
use serde::{Deserialize, Serialize};

pub const PI: f64 = std::f64::consts::PI;

/// Gripper open/close timing as fractions of the planned episode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub close_frac: f64,
    pub open_frac: f64,
}

/// The prior action extracted from a demonstration: three waypoints (one or
/// more midpoints), wrist yaw-pitch-roll, a gripper closure scalar, and the
/// open/close schedule. With a single midpoint the continuous part flattens
/// to 13 dimensions; the schedule adds 2 more.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prior {
    pub w_interaction: Vec3,
    pub w_mid: Vec<Vec3>,
    pub w_end: Vec3,
    pub wrist_ypr: Vec3,
    /// Gripper closure during the hold phase; 0 is fully closed.
    pub grip: f64,
    pub schedule: Schedule,
}

impl Prior {
    /// Continuous dimensions: 3 per waypoint, 3 wrist, 1 gripper.
    pub fn continuous_dim(&self) -> usize {
        3 * (2 + self.w_mid.len()) + 3 + 1
    }

    /// Full flattened dimension including the two schedule fractions.
    pub fn flat_dim(&self) -> usize {
        self.continuous_dim() + 2
    }

    /// Flatten to `[w_interaction, w_mid..., w_end, wrist, grip, close, open]`.
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.flat_dim());
        out.extend_from_slice(&self.w_interaction.to_array());
        for m in &self.w_mid {
            out.extend_from_slice(&m.to_array());
        }
        out.extend_from_slice(&self.w_end.to_array());
        out.extend_from_slice(&self.wrist_ypr.to_array());
        out.push(self.grip);
        out.push(self.schedule.close_frac);
        out.push(self.schedule.open_frac);
        out
    }

    /// Rebuild from a flat vector with `n_mid` midpoints.
    pub fn unflatten(values: &[f64], n_mid: usize) -> Option<Prior> {
        let expected = 3 * (2 + n_mid) + 3 + 1 + 2;
        if values.len() != expected {
            return None;
        }
        let v3 = |i: usize| Vec3::new(values[i], values[i + 1], values[i + 2]);
        let mut idx = 0;
        let w_interaction = v3(idx);
        idx += 3;
        let mut w_mid = Vec::with_capacity(n_mid);
        for _ in 0..n_mid {
            w_mid.push(v3(idx));
            idx += 3;
        }
        let w_end = v3(idx);
        idx += 3;
        let wrist_ypr = v3(idx);
        idx += 3;
        let grip = values[idx];
        let close_frac = values[idx + 1];
        let open_frac = values[idx + 2];
        Some(Prior {
            w_interaction,
            w_mid,
            w_end,
            wrist_ypr,
            grip,
            schedule: Schedule { close_frac, open_frac },
        })
    }

    /// Add a flat residual and re-clamp: gripper to [0,1], schedule
    /// fractions to [0,1] with close strictly before open.
    pub fn apply_residual(&self, delta: &[f64]) -> Prior {
        let mut flat = self.flatten();
        assert_eq!(flat.len(), delta.len(), "residual dimension mismatch");
        for (v, d) in flat.iter_mut().zip(delta) {
            *v += d;
        }
        let n = flat.len();
        let grip_idx = n - 3;
        flat[grip_idx] = flat[grip_idx].clamp(0.0, 1.0);
        let mut close = flat[n - 2].clamp(0.0, 1.0);
        let mut open = flat[n - 1].clamp(0.0, 1.0);
        const MIN_GAP: f64 = 1e-3;
        if open < close + MIN_GAP {
            open = (close + MIN_GAP).min(1.0);
            if open < close + MIN_GAP {
                close = open - MIN_GAP;
            }
        }
        flat[n - 2] = close;
        flat[n - 1] = open;
        Prior::unflatten(&flat, self.w_mid.len()).expect("dimensions preserved")
    }

    /// Normalized flat vector for conditioning: positions are in meters
    /// (already order one), angles divided by pi, the rest untouched.
    pub fn normalized_flat(&self) -> Vec<f64> {
        let mut flat = self.flatten();
        let wp = 3 * (2 + self.w_mid.len());
        for v in flat.iter_mut().skip(wp).take(3) {
            *v /= PI;
        }
        flat
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_prior() -> Prior {
        Prior {
            w_interaction: Vec3::new(0.5, 0.1, 0.4),
            w_mid: vec![Vec3::new(0.45, 0.1, 0.4)],
            w_end: Vec3::new(0.35, 0.1, 0.4),
            wrist_ypr: Vec3::new(0.1, -0.2, 0.3),
            grip: 0.0,
            schedule: Schedule { close_frac: 0.4, open_frac: 0.9 },
        }
    }

    #[test]
    fn thirteen_continuous_dims_with_single_midpoint() {
        let p = sample_prior();
        assert_eq!(p.continuous_dim(), 13);
        assert_eq!(p.flat_dim(), 15);
    }

    #[test]
    fn flatten_roundtrip() {
        let p = sample_prior();
        let flat = p.flatten();
        let back = Prior::unflatten(&flat, 1).unwrap();
        assert_eq!(p, back);
    }

    #[test]
    fn residual_clamps_schedule_ordering() {
        let p = sample_prior();
        let mut delta = vec![0.0; 15];
        delta[13] = 0.6; // push close fraction to 1.0
        delta[14] = -0.5; // pull open fraction to 0.4
        let out = p.apply_residual(&delta);
        assert!(out.schedule.close_frac < out.schedule.open_frac);
        assert!(out.schedule.close_frac >= 0.0 && out.schedule.open_frac <= 1.0);
    }

    #[test]
    fn residual_clamps_grip() {
        let p = sample_prior();
        let mut delta = vec![0.0; 15];
        delta[12] = 9.0;
        assert_eq!(p.apply_residual(&delta).grip, 1.0);
    }
}
