#![allow(dead_code)]

use qgnbv_core::{Aabb, MapConfig, TsdfVoxel, Vec3, VoxelKey, VoxelMap};

pub const VS: f64 = 0.25;

/// Cubic map of `n` voxels per side at the default resolution, origin zero.
pub fn cube_map(n: usize) -> VoxelMap {
    box_map([n, n, n])
}

pub fn box_map(dims: [usize; 3]) -> VoxelMap {
    let ext = Vec3::new(dims[0] as f64, dims[1] as f64, dims[2] as f64) * VS;
    VoxelMap::new(MapConfig::new(VS, Vec3::zeros(), Aabb::new(Vec3::zeros(), ext), 0.42, 10.0)).unwrap()
}

pub fn empty(w: f64) -> TsdfVoxel {
    TsdfVoxel {
        distance: 4.0 * VS,
        weight: w,
    }
}

pub fn occupied(w: f64) -> TsdfVoxel {
    TsdfVoxel {
        distance: 0.0,
        weight: w,
    }
}

pub fn keys(dims: [usize; 3]) -> impl Iterator<Item = VoxelKey> {
    let [nx, ny, nz] = dims.map(|d| d as i32);
    (0..nz).flat_map(move |z| (0..ny).flat_map(move |y| (0..nx).map(move |x| VoxelKey::new(x, y, z))))
}
