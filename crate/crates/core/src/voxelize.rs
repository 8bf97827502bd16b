//! Conservative triangle-mesh voxelization.

use alloc::vec::Vec;

use crate::geometry::Vec3;
use crate::scene::{OccupancyGrid, SceneError};
use crate::tsdf::VoxelKey;

pub type Triangle = [Vec3; 3];

/// Separating-axis test between a triangle and an axis-aligned box given by
/// center and half extent. Contact confined to the box boundary does not count
/// as overlap.
pub fn triangle_box_overlap(tri: &Triangle, center: &Vec3, half: f64) -> bool {
    let v = [tri[0] - center, tri[1] - center, tri[2] - center];
    let e = [v[1] - v[0], v[2] - v[1], v[0] - v[2]];

    let separated = |axis: Vec3| -> bool {
        if axis.norm_squared() < 1e-24 {
            return false;
        }
        let p0 = v[0].dot(&axis);
        let p1 = v[1].dot(&axis);
        let p2 = v[2].dot(&axis);
        let r = half * (axis.x.abs() + axis.y.abs() + axis.z.abs());
        let lo = p0.min(p1).min(p2);
        let hi = p0.max(p1).max(p2);
        lo >= r || hi <= -r
    };

    let basis = [Vec3::x(), Vec3::y(), Vec3::z()];
    for b in &basis {
        if separated(*b) {
            return false;
        }
    }
    if separated(e[0].cross(&e[1])) {
        return false;
    }
    for b in &basis {
        for edge in &e {
            if separated(b.cross(edge)) {
                return false;
            }
        }
    }
    true
}

/// Occupancy grid of every cell that a triangle passes through.
///
/// Grid boundaries start at the mesh's minimum corner, except along flat axes
/// where the mesh plane is centered in a cell layer. One free cell of padding
/// surrounds the mesh. A triangle that only grazes cell boundaries is nudged
/// by a negligible offset so it still claims a cell.
pub fn voxelize(triangles: &[Triangle], voxel_size: f64) -> Result<OccupancyGrid, SceneError> {
    if !(voxel_size > 0.0) {
        return Err(SceneError::VoxelSize(voxel_size));
    }
    if triangles.is_empty() {
        log::warn!("voxelizing an empty mesh; scene will be empty");
        return OccupancyGrid::new([1, 1, 1], voxel_size, Vec3::zeros());
    }
    let mut min = Vec3::repeat(f64::INFINITY);
    let mut max = Vec3::repeat(f64::NEG_INFINITY);
    for t in triangles {
        for v in t {
            if !(v.x.is_finite() && v.y.is_finite() && v.z.is_finite()) {
                return Err(SceneError::Params("mesh contains non-finite vertices"));
            }
            min = min.inf(v);
            max = max.sup(v);
        }
    }
    let mut origin = Vec3::zeros();
    let mut dims = [0usize; 3];
    for i in 0..3 {
        let extent = max[i] - min[i];
        if extent < 1e-9 * voxel_size {
            origin[i] = min[i] - 0.5 * voxel_size;
            dims[i] = 1;
        } else {
            origin[i] = min[i];
            dims[i] = (libm::ceil(extent / voxel_size - 1e-9) as usize).max(1);
        }
        origin[i] -= voxel_size;
        dims[i] += 2;
    }
    let mut grid = OccupancyGrid::new(dims, voxel_size, origin)?;
    let half = 0.5 * voxel_size;
    let nudge = Vec3::repeat(1e-6 * voxel_size);
    for t in triangles {
        if mark_triangle(&mut grid, t, half) == 0 {
            let moved = [t[0] + nudge, t[1] + nudge, t[2] + nudge];
            mark_triangle(&mut grid, &moved, half);
        }
    }
    Ok(grid)
}

fn mark_triangle(grid: &mut OccupancyGrid, t: &Triangle, half: f64) -> usize {
    let lo = grid.key_of(&t[0].inf(&t[1]).inf(&t[2]));
    let hi = grid.key_of(&t[0].sup(&t[1]).sup(&t[2]));
    let mut hits: Vec<VoxelKey> = Vec::new();
    for z in lo.z..=hi.z {
        for y in lo.y..=hi.y {
            for x in lo.x..=hi.x {
                let k = VoxelKey::new(x, y, z);
                if grid.contains(k) && triangle_box_overlap(t, &grid.center(k), half) {
                    hits.push(k);
                }
            }
        }
    }
    for k in &hits {
        grid.set(*k, true);
    }
    hits.len()
}
