//! Simulated 3D LiDAR over a ground-truth occupancy grid.

use alloc::vec::Vec;

use rand_core::RngCore;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{deg, from_angles, Pose, Vec3};
use crate::raycast::VoxelTraversal;
use crate::scene::GroundTruthScene;
use crate::tsdf::VoxelKey;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum HitKind {
    SurfaceHit,
    MaxRangeMiss,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HitPoint {
    pub point: Vec3,
    pub kind: HitKind,
    pub ray_dir: Vec3,
}

impl HitPoint {
    pub fn hit(point: Vec3, ray_dir: Vec3) -> Self {
        HitPoint {
            point,
            kind: HitKind::SurfaceHit,
            ray_dir,
        }
    }

    pub fn miss(point: Vec3, ray_dir: Vec3) -> Self {
        HitPoint {
            point,
            kind: HitKind::MaxRangeMiss,
            ray_dir,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SensorModel {
    pub r_min: f64,
    pub r_max: f64,
    pub vert_min: f64,
    pub vert_max: f64,
    pub horiz_fov: f64,
    pub az_step: f64,
    pub el_step: f64,
    /// Standard deviation of additive range noise on surface hits (meters).
    pub range_noise: f64,
}

impl Default for SensorModel {
    /// 360 degree LiDAR with a [-35, +30] degree vertical field of view,
    /// 0.42 to 10 m range and one-degree angular resolution.
    fn default() -> Self {
        SensorModel {
            r_min: 0.42,
            r_max: 10.0,
            vert_min: deg(-35.0),
            vert_max: deg(30.0),
            horiz_fov: 2.0 * core::f64::consts::PI,
            az_step: deg(1.0),
            el_step: deg(1.0),
            range_noise: 0.0,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SensorError {
    #[error("invalid sensor model: {0}")]
    Model(&'static str),
    #[error("sensor pose at voxel {0} is inside an occupied ground-truth cell")]
    PoseInObstacle(VoxelKey),
}

impl SensorModel {
    pub fn validate(&self) -> Result<(), SensorError> {
        if !(self.r_min > 0.0 && self.r_min < self.r_max) {
            return Err(SensorError::Model("need 0 < r_min < r_max"));
        }
        if !(self.vert_min < self.vert_max) {
            return Err(SensorError::Model("need vert_min < vert_max"));
        }
        if !(self.az_step > 0.0 && self.el_step > 0.0 && self.horiz_fov > 0.0) {
            return Err(SensorError::Model("angular steps and fov must be positive"));
        }
        if !(self.range_noise >= 0.0) {
            return Err(SensorError::Model("range noise must be non-negative"));
        }
        Ok(())
    }

    pub fn azimuth_count(&self) -> usize {
        libm::round(self.horiz_fov / self.az_step) as usize
    }

    pub fn elevation_count(&self) -> usize {
        libm::round((self.vert_max - self.vert_min) / self.el_step) as usize
    }

    pub fn ray_count(&self) -> usize {
        self.azimuth_count() * self.elevation_count()
    }

    fn full_circle(&self) -> bool {
        self.horiz_fov >= 2.0 * core::f64::consts::PI - 1e-9
    }

    /// Unit ray directions for a sensor with heading `yaw`, elevation-major.
    pub fn ray_directions(&self, yaw: f64) -> Vec<Vec3> {
        let n_az = self.azimuth_count();
        let n_el = self.elevation_count();
        let el_step = (self.vert_max - self.vert_min) / n_el as f64;
        let az_step = self.horiz_fov / n_az as f64;
        let az0 = if self.full_circle() {
            0.0
        } else {
            yaw - 0.5 * self.horiz_fov + 0.5 * az_step
        };
        let mut out = Vec::with_capacity(n_az * n_el);
        for j in 0..n_el {
            let el = self.vert_min + (j as f64 + 0.5) * el_step;
            for i in 0..n_az {
                out.push(from_angles(az0 + i as f64 * az_step, el));
            }
        }
        out
    }
}

/// Result of one sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct Scan {
    pub points: Vec<HitPoint>,
    /// Rays whose first obstacle lay inside the minimum range.
    pub blind_rays: usize,
}

/// Cast every ray of the sensor model into the ground truth.
///
/// The first occupied cell entered at a range inside `[r_min, r_max]` yields a
/// surface hit at the entry point; rays that meet an obstacle closer than
/// `r_min` produce no return; everything else is a miss at exactly `r_max`.
pub fn scan<R: RngCore>(
    gt: &GroundTruthScene,
    pose: &Pose,
    model: &SensorModel,
    rng: &mut R,
) -> Result<Scan, SensorError> {
    model.validate()?;
    let origin = gt.origin();
    let vs = gt.voxel_size();
    let sensor = pose.position;
    let own = gt.key_of(&sensor);
    if gt.is_occupied(own) {
        return Err(SensorError::PoseInObstacle(own));
    }
    let noise = if model.range_noise > 0.0 {
        Normal::new(0.0, model.range_noise).ok()
    } else {
        None
    };
    let bounds = gt.bounds();
    let dirs = model.ray_directions(pose.yaw);
    let mut points = Vec::with_capacity(dirs.len());
    let mut blind_rays = 0;
    for dir in dirs {
        let mut hit = None;
        if let Some((t0, t1)) = bounds.clip_segment(&sensor, &dir, model.r_max) {
            let start = sensor + dir * t0;
            for step in VoxelTraversal::new(&origin, vs, &start, &dir, t1 - t0) {
                if gt.is_occupied(step.key) {
                    hit = Some(t0 + step.t_enter);
                    break;
                }
            }
        }
        match hit {
            Some(t) if t < model.r_min => blind_rays += 1,
            Some(t) => {
                let mut range = t;
                if let Some(n) = &noise {
                    range = (range + n.sample(rng)).clamp(model.r_min, model.r_max);
                }
                points.push(HitPoint::hit(sensor + dir * range, dir));
            }
            None => points.push(HitPoint::miss(sensor + dir * model.r_max, dir)),
        }
    }
    Ok(Scan { points, blind_rays })
}

/// The free-space cloud: the full max-range cloud minus every direction
/// already explained by a nearer surface return. Because the simulator tags
/// misses directly, this is the miss subset.
pub fn freespace_points(hits: &[HitPoint]) -> Vec<HitPoint> {
    hits.iter()
        .filter(|h| h.kind == HitKind::MaxRangeMiss)
        .copied()
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::elevation;

    #[test]
    fn default_ray_count() {
        let m = SensorModel::default();
        assert_eq!(m.azimuth_count(), 360);
        assert_eq!(m.elevation_count(), 65);
        assert_eq!(m.ray_directions(0.3).len(), 360 * 65);
    }

    #[test]
    fn directions_inside_vertical_fov() {
        let m = SensorModel::default();
        for d in m.ray_directions(0.0) {
            let e = elevation(&d);
            assert!(e > m.vert_min && e < m.vert_max);
            assert!((d.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn partial_fov_centered_on_yaw() {
        let m = SensorModel {
            horiz_fov: deg(90.0),
            ..SensorModel::default()
        };
        assert_eq!(m.azimuth_count(), 90);
        let dirs = m.ray_directions(deg(90.0));
        assert!(dirs.iter().all(|d| d.y > 0.0));
    }

    #[test]
    fn freespace_is_miss_subset() {
        let a = HitPoint::hit(Vec3::x(), Vec3::x());
        let b = HitPoint::miss(Vec3::y() * 10.0, Vec3::y());
        assert!(freespace_points(&[a, a]).is_empty());
        assert_eq!(freespace_points(&[b, b]), [b, b]);
        assert_eq!(freespace_points(&[a, b, a, b]), [b, b]);
    }
}
