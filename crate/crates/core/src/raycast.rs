//! Voxel traversal along a line segment (Amanatides & Woo).
//!
//! Shared by the TSDF integrator, the simulated LiDAR and the visibility
//! test, so that occlusion reasoning follows the same cells the sensor
//! observes.

use crate::geometry::Vec3;
use crate::tsdf::VoxelKey;

/// One traversed cell and the segment parameters (meters from the start)
/// where the ray enters and leaves it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RayStep {
    pub key: VoxelKey,
    pub t_enter: f64,
    pub t_exit: f64,
}

/// Iterator over every cell the segment passes through with positive length,
/// in order from the start point.
#[derive(Clone, Debug)]
pub struct VoxelTraversal {
    key: [i32; 3],
    step: [i32; 3],
    t_max: [f64; 3],
    t_delta: [f64; 3],
    t: f64,
    len: f64,
    done: bool,
}

impl VoxelTraversal {
    /// Traverse from `start` along unit `dir` for `len` meters on a grid with
    /// the given origin and cell edge.
    pub fn new(origin: &Vec3, voxel_size: f64, start: &Vec3, dir: &Vec3, len: f64) -> Self {
        let mut key = [0i32; 3];
        let mut step = [0i32; 3];
        let mut t_max = [f64::INFINITY; 3];
        let mut t_delta = [f64::INFINITY; 3];
        for i in 0..3 {
            let g = (start[i] - origin[i]) / voxel_size;
            let k = libm::floor(g);
            key[i] = k as i32;
            if dir[i] > 0.0 {
                step[i] = 1;
                t_max[i] = (k + 1.0 - g) * voxel_size / dir[i];
                t_delta[i] = voxel_size / dir[i];
            } else if dir[i] < 0.0 {
                step[i] = -1;
                t_max[i] = (k - g) * voxel_size / dir[i];
                t_delta[i] = -voxel_size / dir[i];
            }
        }
        VoxelTraversal {
            key,
            step,
            t_max,
            t_delta,
            t: 0.0,
            len: len.max(0.0),
            done: false,
        }
    }

    /// Traverse the segment between two points.
    pub fn between(origin: &Vec3, voxel_size: f64, from: &Vec3, to: &Vec3) -> Self {
        let d = to - from;
        let len = d.norm();
        let dir = if len > 0.0 { d / len } else { Vec3::zeros() };
        Self::new(origin, voxel_size, from, &dir, len)
    }

    fn axis_of_min(&self) -> usize {
        let m = &self.t_max;
        if m[0] <= m[1] && m[0] <= m[2] {
            0
        } else if m[1] <= m[2] {
            1
        } else {
            2
        }
    }
}

impl Iterator for VoxelTraversal {
    type Item = RayStep;

    fn next(&mut self) -> Option<RayStep> {
        loop {
            if self.done {
                return None;
            }
            let axis = self.axis_of_min();
            let t_exit = self.t_max[axis].min(self.len);
            let out = RayStep {
                key: VoxelKey::new(self.key[0], self.key[1], self.key[2]),
                t_enter: self.t,
                t_exit,
            };
            if self.t_max[axis] >= self.len {
                self.done = true;
            } else {
                self.key[axis] += self.step[axis];
                self.t = self.t_max[axis];
                self.t_max[axis] += self.t_delta[axis];
            }
            // Cells only touched at a corner or edge have zero length.
            if out.t_exit > out.t_enter || (self.len == 0.0 && self.done) {
                return Some(out);
            }
        }
    }
}
