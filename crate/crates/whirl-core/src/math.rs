//! Small fixed-size linear algebra used across the crate.

use serde::{Deserialize, Serialize};
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

/// 3-vector of f64, used for positions, axes and yaw-pitch-roll triples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3 { x: 0.0, y: 0.0, z: 0.0 };

    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3 { x, y, z }
    }

    pub fn dot(self, other: Vec3) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn cross(self, other: Vec3) -> Vec3 {
        Vec3 {
            x: self.y * other.z - self.z * other.y,
            y: self.z * other.x - self.x * other.z,
            z: self.x * other.y - self.y * other.x,
        }
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn dist(self, other: Vec3) -> f64 {
        (self - other).norm()
    }

    pub fn normalized(self) -> Vec3 {
        let n = self.norm();
        if n == 0.0 {
            Vec3::ZERO
        } else {
            self * (1.0 / n)
        }
    }

    /// Clamp the vector's norm to at most `max_norm`.
    pub fn clamp_norm(self, max_norm: f64) -> Vec3 {
        let n = self.norm();
        if n > max_norm && n > 0.0 {
            self * (max_norm / n)
        } else {
            self
        }
    }

    /// Rotate about a unit axis by `angle` radians (Rodrigues' formula).
    pub fn rotated_about(self, axis: Vec3, angle: f64) -> Vec3 {
        let (s, c) = angle.sin_cos();
        self * c + axis.cross(self) * s + axis * (axis.dot(self) * (1.0 - c))
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

impl Default for Vec3 {
    fn default() -> Self {
        Vec3::ZERO
    }
}

impl From<[f64; 3]> for Vec3 {
    fn from(a: [f64; 3]) -> Self {
        Vec3 { x: a[0], y: a[1], z: a[2] }
    }
}

impl From<Vec3> for [f64; 3] {
    fn from(v: Vec3) -> Self {
        [v.x, v.y, v.z]
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl AddAssign for Vec3 {
    fn add_assign(&mut self, o: Vec3) {
        *self = *self + o;
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

/// Row-major 3x3 matrix, used for camera extrinsics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[[f64; 3]; 3]", into = "[[f64; 3]; 3]")]
pub struct Mat3 {
    pub rows: [[f64; 3]; 3],
}

impl Mat3 {
    pub const IDENTITY: Mat3 = Mat3 {
        rows: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
    };

    pub fn mul_vec(&self, v: Vec3) -> Vec3 {
        let r = &self.rows;
        Vec3::new(
            r[0][0] * v.x + r[0][1] * v.y + r[0][2] * v.z,
            r[1][0] * v.x + r[1][1] * v.y + r[1][2] * v.z,
            r[2][0] * v.x + r[2][1] * v.y + r[2][2] * v.z,
        )
    }

    pub fn transpose(&self) -> Mat3 {
        let r = &self.rows;
        Mat3 {
            rows: [
                [r[0][0], r[1][0], r[2][0]],
                [r[0][1], r[1][1], r[2][1]],
                [r[0][2], r[1][2], r[2][2]],
            ],
        }
    }

    pub fn det(&self) -> f64 {
        let r = &self.rows;
        r[0][0] * (r[1][1] * r[2][2] - r[1][2] * r[2][1])
            - r[0][1] * (r[1][0] * r[2][2] - r[1][2] * r[2][0])
            + r[0][2] * (r[1][0] * r[2][1] - r[1][1] * r[2][0])
    }

    /// Build a rotation from yaw (about z), pitch (about y), roll (about x),
    /// composed as Rz(yaw) * Ry(pitch) * Rx(roll).
    pub fn from_ypr(ypr: Vec3) -> Mat3 {
        let (sy, cy) = ypr.x.sin_cos();
        let (sp, cp) = ypr.y.sin_cos();
        let (sr, cr) = ypr.z.sin_cos();
        Mat3 {
            rows: [
                [cy * cp, cy * sp * sr - sy * cr, cy * sp * cr + sy * sr],
                [sy * cp, sy * sp * sr + cy * cr, sy * sp * cr - cy * sr],
                [-sp, cp * sr, cp * cr],
            ],
        }
    }
}

impl From<[[f64; 3]; 3]> for Mat3 {
    fn from(rows: [[f64; 3]; 3]) -> Self {
        Mat3 { rows }
    }
}

impl From<Mat3> for [[f64; 3]; 3] {
    fn from(m: Mat3) -> Self {
        m.rows
    }
}

/// Position plus yaw-pitch-roll orientation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub position: Vec3,
    pub ypr: Vec3,
}

impl Pose {
    pub fn new(position: Vec3, ypr: Vec3) -> Self {
        Pose { position, ypr }
    }
}

/// Axis-aligned box, used for goal regions and shelf slabs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub min: Vec3,
    pub max: Vec3,
}

impl Aabb {
    pub fn contains(&self, p: Vec3) -> bool {
        p.x >= self.min.x
            && p.x <= self.max.x
            && p.y >= self.min.y
            && p.y <= self.max.y
            && p.z >= self.min.z
            && p.z <= self.max.z
    }

    /// Slab test for segment-box intersection.
    pub fn intersects_segment(&self, a: Vec3, b: Vec3) -> bool {
        let d = b - a;
        let mut t_min = 0.0f64;
        let mut t_max = 1.0f64;
        let (av, dv, lo, hi) = (a.to_array(), d.to_array(), self.min.to_array(), self.max.to_array());
        for i in 0..3 {
            if dv[i].abs() < 1e-15 {
                if av[i] < lo[i] || av[i] > hi[i] {
                    return false;
                }
            } else {
                let inv = 1.0 / dv[i];
                let mut t0 = (lo[i] - av[i]) * inv;
                let mut t1 = (hi[i] - av[i]) * inv;
                if t0 > t1 {
                    std::mem::swap(&mut t0, &mut t1);
                }
                t_min = t_min.max(t0);
                t_max = t_max.min(t1);
                if t_min > t_max {
                    return false;
                }
            }
        }
        true
    }
}

pub fn clamp(v: f64, lo: f64, hi: f64) -> f64 {
    v.max(lo).min(hi)
}

/// Move a scalar toward `target` by at most `max_delta`.
pub fn step_toward(current: f64, target: f64, max_delta: f64) -> f64 {
    let d = target - current;
    if d.abs() <= max_delta {
        target
    } else {
        current + max_delta * d.signum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn rodrigues_matches_axis_rotation() {
        let v = Vec3::new(1.0, 0.0, 0.0);
        let r = v.rotated_about(Vec3::new(0.0, 0.0, 1.0), std::f64::consts::FRAC_PI_2);
        assert_abs_diff_eq!(r.x, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.y, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.z, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn ypr_rotation_is_proper() {
        let m = Mat3::from_ypr(Vec3::new(0.3, -0.2, 1.1));
        assert_abs_diff_eq!(m.det(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn segment_box_intersection() {
        let slab = Aabb {
            min: Vec3::new(0.0, 0.0, 0.0),
            max: Vec3::new(1.0, 1.0, 0.1),
        };
        assert!(slab.intersects_segment(Vec3::new(0.5, 0.5, -1.0), Vec3::new(0.5, 0.5, 1.0)));
        assert!(!slab.intersects_segment(Vec3::new(0.5, 0.5, 0.2), Vec3::new(0.5, 0.5, 1.0)));
        // Segment lying fully inside.
        assert!(slab.intersects_segment(Vec3::new(0.2, 0.2, 0.05), Vec3::new(0.8, 0.8, 0.05)));
    }

    #[test]
    fn clamp_norm_preserves_direction() {
        let v = Vec3::new(3.0, 4.0, 0.0).clamp_norm(1.0);
        assert_abs_diff_eq!(v.norm(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(v.y / v.x, 4.0 / 3.0, epsilon = 1e-12);
    }
}
