use serde::{Deserialize, Serialize};

pub type Vec3 = nalgebra::Vector3<f64>;

/// Axis-aligned box in world coordinates (meters).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub min: Vec3,
    pub max: Vec3,
}

impl Aabb {
    pub fn new(min: Vec3, max: Vec3) -> Self {
        Aabb { min, max }
    }

    pub fn is_degenerate(&self) -> bool {
        (0..3).any(|i| !(self.max[i] > self.min[i]))
    }

    pub fn contains(&self, p: &Vec3) -> bool {
        (0..3).all(|i| p[i] >= self.min[i] && p[i] <= self.max[i])
    }

    pub fn extent(&self) -> Vec3 {
        self.max - self.min
    }

    /// Parametric range `[t0, t1]` of the segment `start + t * dir`,
    /// `t in [0, len]`, lying inside the box. `dir` must be unit length.
    pub fn clip_segment(&self, start: &Vec3, dir: &Vec3, len: f64) -> Option<(f64, f64)> {
        let mut t0 = 0.0f64;
        let mut t1 = len;
        for i in 0..3 {
            if dir[i] == 0.0 {
                if start[i] < self.min[i] || start[i] > self.max[i] {
                    return None;
                }
                continue;
            }
            let inv = 1.0 / dir[i];
            let mut a = (self.min[i] - start[i]) * inv;
            let mut b = (self.max[i] - start[i]) * inv;
            if a > b {
                core::mem::swap(&mut a, &mut b);
            }
            t0 = t0.max(a);
            t1 = t1.min(b);
            if t0 > t1 {
                return None;
            }
        }
        Some((t0, t1))
    }
}

/// Robot or sensor pose: position plus heading about the vertical axis.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub position: Vec3,
    pub yaw: f64,
}

impl Pose {
    pub fn new(position: Vec3, yaw: f64) -> Self {
        Pose { position, yaw }
    }
}

/// Elevation of a direction above the horizontal plane, in radians.
pub fn elevation(dir: &Vec3) -> f64 {
    let horiz = libm::hypot(dir.x, dir.y);
    libm::atan2(dir.z, horiz)
}

/// Heading of a direction about the vertical axis, in radians.
pub fn azimuth(dir: &Vec3) -> f64 {
    libm::atan2(dir.y, dir.x)
}

/// Unit vector from azimuth and elevation.
pub fn from_angles(azimuth: f64, elevation: f64) -> Vec3 {
    let ce = libm::cos(elevation);
    Vec3::new(
        ce * libm::cos(azimuth),
        ce * libm::sin(azimuth),
        libm::sin(elevation),
    )
}

pub fn deg(d: f64) -> f64 {
    d * core::f64::consts::PI / 180.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clip_inside_and_outside() {
        let b = Aabb::new(Vec3::zeros(), Vec3::new(1.0, 1.0, 1.0));
        let (t0, t1) = b
            .clip_segment(&Vec3::new(-1.0, 0.5, 0.5), &Vec3::x(), 5.0)
            .unwrap();
        assert!((t0 - 1.0).abs() < 1e-12 && (t1 - 2.0).abs() < 1e-12);
        assert!(b
            .clip_segment(&Vec3::new(-1.0, 2.0, 0.5), &Vec3::x(), 5.0)
            .is_none());
    }

    #[test]
    fn angles_round_trip() {
        let v = from_angles(0.3, -0.2);
        assert!((azimuth(&v) - 0.3).abs() < 1e-12);
        assert!((elevation(&v) + 0.2).abs() < 1e-12);
    }
}
