//! Ground-truth scenes and procedural scene generators.

use alloc::vec;
use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{Aabb, Vec3};
use crate::tsdf::{key_in, Connectivity, MapConfig, VoxelKey};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SceneError {
    #[error("scene dimensions must be positive, got {0:?}")]
    Dims([usize; 3]),
    #[error("voxel size must be positive, got {0}")]
    VoxelSize(f64),
    #[error("degenerate scene parameters: {0}")]
    Params(&'static str),
    #[error("could not place {wanted} disjoint objects (placed {placed})")]
    Placement { wanted: usize, placed: usize },
}

/// Dense occupancy bit grid; cell `(i, j, k)` maps to voxel key `(i, j, k)`.
#[derive(Clone, Debug, PartialEq)]
pub struct OccupancyGrid {
    dims: [usize; 3],
    voxel_size: f64,
    origin: Vec3,
    bits: Vec<u64>,
}

impl OccupancyGrid {
    pub fn new(dims: [usize; 3], voxel_size: f64, origin: Vec3) -> Result<Self, SceneError> {
        if dims.iter().any(|&d| d == 0 || d > i32::MAX as usize) {
            return Err(SceneError::Dims(dims));
        }
        if !(voxel_size > 0.0) {
            return Err(SceneError::VoxelSize(voxel_size));
        }
        let n = dims[0] * dims[1] * dims[2];
        Ok(OccupancyGrid {
            dims,
            voxel_size,
            origin,
            bits: vec![0; n.div_ceil(64)],
        })
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn voxel_size(&self) -> f64 {
        self.voxel_size
    }

    pub fn origin(&self) -> Vec3 {
        self.origin
    }

    pub fn len(&self) -> usize {
        self.dims[0] * self.dims[1] * self.dims[2]
    }

    pub fn is_empty(&self) -> bool {
        self.bits.iter().all(|&w| w == 0)
    }

    pub fn contains(&self, key: VoxelKey) -> bool {
        key.x >= 0
            && key.y >= 0
            && key.z >= 0
            && (key.x as usize) < self.dims[0]
            && (key.y as usize) < self.dims[1]
            && (key.z as usize) < self.dims[2]
    }

    /// Row-major index with x fastest.
    pub fn linear_index(&self, key: VoxelKey) -> usize {
        key.x as usize + self.dims[0] * (key.y as usize + self.dims[1] * key.z as usize)
    }

    pub fn key_at(&self, index: usize) -> VoxelKey {
        let x = index % self.dims[0];
        let y = (index / self.dims[0]) % self.dims[1];
        let z = index / (self.dims[0] * self.dims[1]);
        VoxelKey::new(x as i32, y as i32, z as i32)
    }

    #[inline]
    pub fn get(&self, key: VoxelKey) -> bool {
        if !self.contains(key) {
            return false;
        }
        let i = self.linear_index(key);
        self.bits[i / 64] & (1u64 << (i % 64)) != 0
    }

    pub fn set(&mut self, key: VoxelKey, occupied: bool) {
        if !self.contains(key) {
            return;
        }
        let i = self.linear_index(key);
        if occupied {
            self.bits[i / 64] |= 1u64 << (i % 64);
        } else {
            self.bits[i / 64] &= !(1u64 << (i % 64));
        }
    }

    /// Set every cell whose center lies inside the world-space box.
    pub fn fill_box(&mut self, min: Vec3, max: Vec3, occupied: bool) {
        let lo = self.key_of(&min);
        let hi = self.key_of(&max);
        for z in lo.z.max(0)..=hi.z {
            for y in lo.y.max(0)..=hi.y {
                for x in lo.x.max(0)..=hi.x {
                    let k = VoxelKey::new(x, y, z);
                    let c = self.center(k);
                    if (0..3).all(|i| c[i] >= min[i] && c[i] <= max[i]) {
                        self.set(k, occupied);
                    }
                }
            }
        }
    }

    pub fn key_of(&self, p: &Vec3) -> VoxelKey {
        let g = (p - self.origin) / self.voxel_size;
        VoxelKey::new(
            libm::floor(g.x) as i32,
            libm::floor(g.y) as i32,
            libm::floor(g.z) as i32,
        )
    }

    pub fn center(&self, key: VoxelKey) -> Vec3 {
        self.origin + (key.as_vec() + Vec3::repeat(0.5)) * self.voxel_size
    }

    pub fn bounds(&self) -> Aabb {
        let ext = Vec3::new(self.dims[0] as f64, self.dims[1] as f64, self.dims[2] as f64)
            * self.voxel_size;
        Aabb::new(self.origin, self.origin + ext)
    }

    pub fn occupied_keys(&self) -> impl Iterator<Item = VoxelKey> + '_ {
        (0..self.len())
            .filter(|&i| self.bits[i / 64] & (1u64 << (i % 64)) != 0)
            .map(|i| self.key_at(i))
    }

    pub fn occupied_count(&self) -> usize {
        self.bits.iter().map(|w| w.count_ones() as usize).sum()
    }
}

/// The true environment: occupancy plus its precomputed surface voxels.
#[derive(Clone, Debug, PartialEq)]
pub struct GroundTruthScene {
    grid: OccupancyGrid,
    surface: Vec<VoxelKey>,
    start_hint: Option<Vec3>,
}

impl GroundTruthScene {
    /// Surface voxels are occupied cells with at least one in-grid free face
    /// neighbour; cells outside the grid are not part of the scene.
    pub fn new(grid: OccupancyGrid) -> Self {
        let mut surface: Vec<VoxelKey> = grid
            .occupied_keys()
            .filter(|&k| {
                Connectivity::Six
                    .offsets()
                    .iter()
                    .map(|d| k.offset(*d))
                    .any(|n| grid.contains(n) && !grid.get(n))
            })
            .collect();
        surface.sort();
        GroundTruthScene {
            grid,
            surface,
            start_hint: None,
        }
    }

    pub fn with_start(mut self, start: Vec3) -> Self {
        self.start_hint = Some(start);
        self
    }

    pub fn grid(&self) -> &OccupancyGrid {
        &self.grid
    }

    pub fn dims(&self) -> [usize; 3] {
        self.grid.dims
    }

    pub fn voxel_size(&self) -> f64 {
        self.grid.voxel_size
    }

    pub fn origin(&self) -> Vec3 {
        self.grid.origin
    }

    pub fn bounds(&self) -> Aabb {
        self.grid.bounds()
    }

    #[inline]
    pub fn is_occupied(&self, key: VoxelKey) -> bool {
        self.grid.get(key)
    }

    pub fn key_of(&self, p: &Vec3) -> VoxelKey {
        self.grid.key_of(p)
    }

    pub fn center(&self, key: VoxelKey) -> Vec3 {
        self.grid.center(key)
    }

    /// Surface voxels in key order.
    pub fn surface_keys(&self) -> &[VoxelKey] {
        &self.surface
    }

    pub fn start_hint(&self) -> Option<Vec3> {
        self.start_hint
    }

    /// Map configuration aligned with this scene's grid.
    pub fn map_config(&self, min_range: f64, max_range: f64) -> MapConfig {
        MapConfig::new(
            self.grid.voxel_size,
            self.grid.origin,
            self.bounds(),
            min_range,
            max_range,
        )
    }

    /// Euclidean distance from the voxel center to the nearest occupied voxel
    /// center, truncated at `tau`.
    pub fn distance_to_occupied(&self, key: VoxelKey, tau: f64) -> f64 {
        if self.is_occupied(key) {
            return 0.0;
        }
        let r = libm::ceil(tau / self.grid.voxel_size) as i32;
        let mut best2 = f64::INFINITY;
        for dz in -r..=r {
            for dy in -r..=r {
                for dx in -r..=r {
                    let n = key.offset([dx, dy, dz]);
                    if self.is_occupied(n) {
                        let d2 = (dx * dx + dy * dy + dz * dz) as f64;
                        if d2 < best2 {
                            best2 = d2;
                        }
                    }
                }
            }
        }
        (libm::sqrt(best2) * self.grid.voxel_size).min(tau)
    }

    /// No occupied voxel center lies strictly within `radius` of `p`, and `p`
    /// is inside the grid.
    pub fn clearance_ok(&self, p: &Vec3, radius: f64) -> bool {
        if !self.bounds().contains(p) {
            return false;
        }
        let lo = self.key_of(&(p - Vec3::repeat(radius)));
        let hi = self.key_of(&(p + Vec3::repeat(radius)));
        let r2 = radius * radius;
        for z in lo.z..=hi.z {
            for y in lo.y..=hi.y {
                for x in lo.x..=hi.x {
                    let k = VoxelKey::new(x, y, z);
                    if self.is_occupied(k) && (self.center(k) - p).norm_squared() < r2 {
                        return false;
                    }
                }
            }
        }
        true
    }

    /// A start position: the scene's hint if it has one, otherwise the free
    /// voxel center farthest from any obstacle (capped at `2 * radius`,
    /// first in key order on ties).
    pub fn default_start(&self, radius: f64) -> Option<Vec3> {
        if let Some(s) = self.start_hint {
            return Some(s);
        }
        let cap = 2.0 * radius;
        let mut best: Option<(f64, Vec3)> = None;
        for i in 0..self.grid.len() {
            let k = self.grid.key_at(i);
            if self.is_occupied(k) {
                continue;
            }
            let c = self.center(k);
            if !self.clearance_ok(&c, radius) {
                continue;
            }
            let d = self.distance_to_occupied(k, cap);
            if best.map_or(true, |(b, _)| d > b) {
                best = Some((d, c));
                if d >= cap {
                    break;
                }
            }
        }
        best.map(|(_, c)| c)
    }
}

/// Procedural scene families.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum SceneKind {
    /// Closed hollow box with one-voxel walls; `size` is the outer extent.
    Room { size: Vec3 },
    /// Optional entry room leading into a stem corridor that splits into two
    /// arms. Widths and heights are interior clearances.
    CorridorT {
        width: f64,
        height: f64,
        stem_length: f64,
        arm_length: f64,
        entry_room: f64,
    },
    /// Ground slab with `count` disjoint boxes, laid out from `layout_seed`.
    ScatteredObjects {
        extent: Vec3,
        count: usize,
        layout_seed: u64,
    },
}

impl SceneKind {
    pub fn room() -> Self {
        SceneKind::Room {
            size: Vec3::new(10.0, 10.0, 3.0),
        }
    }

    pub fn corridor_t() -> Self {
        SceneKind::CorridorT {
            width: 3.0,
            height: 3.0,
            stem_length: 12.0,
            arm_length: 9.0,
            entry_room: 8.0,
        }
    }

    pub fn scattered_objects() -> Self {
        SceneKind::ScatteredObjects {
            extent: Vec3::new(20.0, 20.0, 7.0),
            count: 3,
            layout_seed: 7,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            SceneKind::Room { .. } => "room",
            SceneKind::CorridorT { .. } => "corridor-t",
            SceneKind::ScatteredObjects { .. } => "scattered-objects",
        }
    }
}

fn cells(len: f64, vs: f64) -> usize {
    libm::round(len / vs) as usize
}

/// Build a deterministic procedural scene at resolution `voxel_size`.
pub fn generate_scene(kind: &SceneKind, voxel_size: f64) -> Result<GroundTruthScene, SceneError> {
    if !(voxel_size > 0.0) {
        return Err(SceneError::VoxelSize(voxel_size));
    }
    match kind {
        SceneKind::Room { size } => room(*size, voxel_size),
        SceneKind::CorridorT {
            width,
            height,
            stem_length,
            arm_length,
            entry_room,
        } => corridor_t(*width, *height, *stem_length, *arm_length, *entry_room, voxel_size),
        SceneKind::ScatteredObjects {
            extent,
            count,
            layout_seed,
        } => scattered(*extent, *count, *layout_seed, voxel_size),
    }
}

fn room(size: Vec3, vs: f64) -> Result<GroundTruthScene, SceneError> {
    let dims = [cells(size.x, vs), cells(size.y, vs), cells(size.z, vs)];
    if dims.iter().any(|&d| d < 3) {
        return Err(SceneError::Params("room must be at least three voxels per axis"));
    }
    let mut grid = OccupancyGrid::new(dims, vs, Vec3::zeros())?;
    for i in 0..grid.len() {
        let k = grid.key_at(i);
        let border = k.x == 0
            || k.y == 0
            || k.z == 0
            || k.x as usize == dims[0] - 1
            || k.y as usize == dims[1] - 1
            || k.z as usize == dims[2] - 1;
        if border {
            grid.set(k, true);
        }
    }
    let start = Vec3::new(size.x / 2.0, size.y / 2.0, size.z / 2.0);
    Ok(GroundTruthScene::new(grid).with_start(start))
}

fn corridor_t(
    width: f64,
    height: f64,
    stem: f64,
    arm: f64,
    entry: f64,
    vs: f64,
) -> Result<GroundTruthScene, SceneError> {
    if !(width >= 2.0 * vs && height >= 2.0 * vs && stem > 0.0 && arm > 0.0 && entry >= 0.0) {
        return Err(SceneError::Params("corridor dimensions too small"));
    }
    let room_w = entry.max(width);
    let inner_x = (2.0 * arm + width).max(room_w);
    let inner_y = entry + stem + width;
    let wall = vs;
    let size = Vec3::new(inner_x + 2.0 * wall, inner_y + 2.0 * wall, height + 2.0 * wall);
    let dims = [cells(size.x, vs), cells(size.y, vs), cells(size.z, vs)];
    let mut grid = OccupancyGrid::new(dims, vs, Vec3::zeros())?;
    grid.fill_box(Vec3::zeros(), size, true);
    let cx = size.x / 2.0;
    let z0 = wall;
    let z1 = wall + height;
    let eps = 1e-9;
    let carve = |g: &mut OccupancyGrid, x0: f64, x1: f64, y0: f64, y1: f64| {
        g.fill_box(
            Vec3::new(x0 + eps, y0 + eps, z0 + eps),
            Vec3::new(x1 - eps, y1 - eps, z1 - eps),
            false,
        );
    };
    let y_room = wall + entry;
    if entry > 0.0 {
        carve(&mut grid, cx - room_w / 2.0, cx + room_w / 2.0, wall, y_room);
    }
    let y_cross = y_room + stem;
    carve(&mut grid, cx - width / 2.0, cx + width / 2.0, wall.min(y_room), y_cross);
    carve(&mut grid, cx - arm - width / 2.0, cx + arm + width / 2.0, y_cross, y_cross + width);
    let start = if entry > 0.0 {
        Vec3::new(cx, wall + entry / 2.0, wall + height / 2.0)
    } else {
        Vec3::new(cx, wall + width / 2.0, wall + height / 2.0)
    };
    Ok(GroundTruthScene::new(grid).with_start(start))
}

fn scattered(extent: Vec3, count: usize, seed: u64, vs: f64) -> Result<GroundTruthScene, SceneError> {
    if !(extent.x >= 4.0 && extent.y >= 4.0 && extent.z >= 3.0) {
        return Err(SceneError::Params("scattered-objects extent too small"));
    }
    let dims = [cells(extent.x, vs), cells(extent.y, vs), cells(extent.z, vs)];
    let mut grid = OccupancyGrid::new(dims, vs, Vec3::zeros())?;
    grid.fill_box(Vec3::zeros(), Vec3::new(extent.x, extent.y, vs), true);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut unit = move || (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
    let margin = 3.0;
    let gap = 2.0;
    let max_h = (extent.z - 2.5).max(1.0);
    let mut placed: Vec<(Vec3, Vec3)> = Vec::new();
    let mut attempts = 0;
    while placed.len() < count && attempts < 1000 {
        attempts += 1;
        let sx = 1.5 + unit() * 2.5;
        let sy = 1.5 + unit() * 2.5;
        let sz = 1.0 + unit() * (max_h - 1.0);
        let x0 = margin + unit() * (extent.x - 2.0 * margin - sx).max(0.0);
        let y0 = margin + unit() * (extent.y - 2.0 * margin - sy).max(0.0);
        let snap = |v: f64| libm::round(v / vs) * vs;
        let lo = Vec3::new(snap(x0), snap(y0), vs);
        let hi = Vec3::new(snap(x0 + sx), snap(y0 + sy), snap(vs + sz));
        if hi.x > extent.x - margin || hi.y > extent.y - margin {
            continue;
        }
        let clear = placed.iter().all(|(a, b)| {
            lo.x >= b.x + gap || hi.x + gap <= a.x || lo.y >= b.y + gap || hi.y + gap <= a.y
        });
        if clear {
            placed.push((lo, hi));
        }
    }
    if placed.len() < count {
        return Err(SceneError::Placement {
            wanted: count,
            placed: placed.len(),
        });
    }
    let eps = 1e-9;
    for (lo, hi) in &placed {
        grid.fill_box(lo + Vec3::repeat(eps), hi - Vec3::repeat(eps), true);
    }
    let start = Vec3::new(1.5, 1.5, 2.5f64.min(extent.z - 1.25));
    Ok(GroundTruthScene::new(grid).with_start(start))
}

/// Flood fill over free cells from `seed` (6-connected); returns visited cells.
pub fn free_component(grid: &OccupancyGrid, seed: VoxelKey) -> Vec<bool> {
    let mut seen = vec![false; grid.len()];
    if !grid.contains(seed) || grid.get(seed) {
        return seen;
    }
    let (lo, hi) = (
        VoxelKey::new(0, 0, 0),
        VoxelKey::new(
            grid.dims[0] as i32 - 1,
            grid.dims[1] as i32 - 1,
            grid.dims[2] as i32 - 1,
        ),
    );
    let mut stack = vec![seed];
    seen[grid.linear_index(seed)] = true;
    while let Some(k) = stack.pop() {
        for d in Connectivity::Six.offsets() {
            let n = k.offset(*d);
            if !key_in(n, lo, hi) || grid.get(n) {
                continue;
            }
            let i = grid.linear_index(n);
            if !seen[i] {
                seen[i] = true;
                stack.push(n);
            }
        }
    }
    seen
}
