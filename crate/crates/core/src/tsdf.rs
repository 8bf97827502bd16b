//! Sparse TSDF voxel grid.
//!
//! Voxels live in 8x8x8 blocks allocated on first write. Every voxel stores an
//! aggregated projective distance and a confidence weight; observations are
//! merged by a weighted running average with weight `1/r^2`.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{Aabb, Vec3};
use crate::raycast::VoxelTraversal;
use crate::sensor::{HitKind, HitPoint};

pub const BLOCK_EDGE: i32 = 8;
const BLOCK_VOXELS: usize = (BLOCK_EDGE * BLOCK_EDGE * BLOCK_EDGE) as usize;

/// Integer grid index. Ordering is lexicographic on (x, y, z).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct VoxelKey {
    pub x: i32,
    pub y: i32,
    pub z: i32,
}

impl VoxelKey {
    pub const fn new(x: i32, y: i32, z: i32) -> Self {
        VoxelKey { x, y, z }
    }

    pub fn offset(self, d: [i32; 3]) -> Self {
        VoxelKey::new(self.x + d[0], self.y + d[1], self.z + d[2])
    }

    pub fn as_vec(self) -> Vec3 {
        Vec3::new(self.x as f64, self.y as f64, self.z as f64)
    }

    fn block(self) -> (BlockKey, usize) {
        let bx = self.x.div_euclid(BLOCK_EDGE);
        let by = self.y.div_euclid(BLOCK_EDGE);
        let bz = self.z.div_euclid(BLOCK_EDGE);
        let lx = self.x.rem_euclid(BLOCK_EDGE);
        let ly = self.y.rem_euclid(BLOCK_EDGE);
        let lz = self.z.rem_euclid(BLOCK_EDGE);
        let idx = (lx + BLOCK_EDGE * (ly + BLOCK_EDGE * lz)) as usize;
        ((bx, by, bz), idx)
    }
}

impl fmt::Display for VoxelKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.x, self.y, self.z)
    }
}

type BlockKey = (i32, i32, i32);

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TsdfVoxel {
    /// Truncated signed distance (meters).
    pub distance: f64,
    /// Accumulated confidence; zero means never observed.
    pub weight: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum VoxelState {
    Empty,
    Occupied,
    Unknown,
}

/// Classify a voxel given the voxel edge length.
///
/// `distance == voxel_size` is treated as occupied.
pub fn classify(voxel: &TsdfVoxel, voxel_size: f64) -> VoxelState {
    if voxel.weight <= 0.0 {
        VoxelState::Unknown
    } else if voxel.distance > voxel_size {
        VoxelState::Empty
    } else {
        VoxelState::Occupied
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Connectivity {
    Six,
    Eighteen,
    TwentySix,
}

impl Connectivity {
    pub fn from_count(n: u32) -> Option<Self> {
        match n {
            6 => Some(Connectivity::Six),
            18 => Some(Connectivity::Eighteen),
            26 => Some(Connectivity::TwentySix),
            _ => None,
        }
    }

    pub fn offsets(self) -> &'static [[i32; 3]] {
        match self {
            Connectivity::Six => &OFFSETS_26[..6],
            Connectivity::Eighteen => &OFFSETS_26[..18],
            Connectivity::TwentySix => &OFFSETS_26[..],
        }
    }
}

// Ordered by L1 norm: faces, then edges, then corners.
const OFFSETS_26: [[i32; 3]; 26] = [
    [-1, 0, 0],
    [1, 0, 0],
    [0, -1, 0],
    [0, 1, 0],
    [0, 0, -1],
    [0, 0, 1],
    [-1, -1, 0],
    [-1, 1, 0],
    [1, -1, 0],
    [1, 1, 0],
    [-1, 0, -1],
    [-1, 0, 1],
    [1, 0, -1],
    [1, 0, 1],
    [0, -1, -1],
    [0, -1, 1],
    [0, 1, -1],
    [0, 1, 1],
    [-1, -1, -1],
    [-1, -1, 1],
    [-1, 1, -1],
    [-1, 1, 1],
    [1, -1, -1],
    [1, -1, 1],
    [1, 1, -1],
    [1, 1, 1],
];

pub fn neighbors(key: VoxelKey, connectivity: Connectivity) -> impl Iterator<Item = VoxelKey> {
    connectivity.offsets().iter().map(move |d| key.offset(*d))
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MapError {
    #[error("voxel size must be positive, got {0}")]
    VoxelSize(f64),
    #[error("truncation distance {truncation} must be at least twice the voxel size {voxel_size}")]
    Truncation { truncation: f64, voxel_size: f64 },
    #[error("exploration bounds are degenerate")]
    DegenerateBounds,
    #[error("sensor range limits invalid: min {min}, max {max}")]
    Range { min: f64, max: f64 },
    #[error("point {index} lies {range:.3} m from the sensor, outside [{min}, {max}]")]
    PointOutOfRange {
        index: usize,
        range: f64,
        min: f64,
        max: f64,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MapConfig {
    pub voxel_size: f64,
    pub truncation: f64,
    pub origin: Vec3,
    pub bounds: Aabb,
    /// Observations closer than this are weighted as if at this range.
    pub min_range: f64,
    pub max_range: f64,
}

impl MapConfig {
    /// Map with the default truncation of four voxels.
    pub fn new(voxel_size: f64, origin: Vec3, bounds: Aabb, min_range: f64, max_range: f64) -> Self {
        MapConfig {
            voxel_size,
            truncation: 4.0 * voxel_size,
            origin,
            bounds,
            min_range,
            max_range,
        }
    }

    pub fn validate(&self) -> Result<(), MapError> {
        if !(self.voxel_size > 0.0) {
            return Err(MapError::VoxelSize(self.voxel_size));
        }
        if !(self.truncation >= 2.0 * self.voxel_size) {
            return Err(MapError::Truncation {
                truncation: self.truncation,
                voxel_size: self.voxel_size,
            });
        }
        if self.bounds.is_degenerate() {
            return Err(MapError::DegenerateBounds);
        }
        if !(self.min_range > 0.0 && self.max_range > self.min_range) {
            return Err(MapError::Range {
                min: self.min_range,
                max: self.max_range,
            });
        }
        Ok(())
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
        self.origin + (key.as_vec() + Vec3::new(0.5, 0.5, 0.5)) * self.voxel_size
    }

    /// Inclusive key range of voxels whose centers lie inside the bounds.
    pub fn key_range(&self) -> (VoxelKey, VoxelKey) {
        let lo = (self.bounds.min - self.origin) / self.voxel_size;
        let hi = (self.bounds.max - self.origin) / self.voxel_size;
        let c = |v: f64| libm::ceil(v - 0.5 - 1e-9) as i32;
        let f = |v: f64| libm::floor(v - 0.5 + 1e-9) as i32;
        (
            VoxelKey::new(c(lo.x), c(lo.y), c(lo.z)),
            VoxelKey::new(f(hi.x), f(hi.y), f(hi.z)),
        )
    }

    pub fn in_bounds(&self, key: VoxelKey) -> bool {
        let (lo, hi) = self.key_range();
        key_in(key, lo, hi)
    }

    /// Voxel count of the bounded exploration domain.
    pub fn domain_size(&self) -> usize {
        let (lo, hi) = self.key_range();
        let n = |a: i32, b: i32| if b >= a { (b - a + 1) as usize } else { 0 };
        n(lo.x, hi.x) * n(lo.y, hi.y) * n(lo.z, hi.z)
    }
}

pub(crate) fn key_in(key: VoxelKey, lo: VoxelKey, hi: VoxelKey) -> bool {
    key.x >= lo.x && key.x <= hi.x && key.y >= lo.y && key.y <= hi.y && key.z >= lo.z && key.z <= hi.z
}

/// Read access to voxel classification, shared by the live map and its dense
/// snapshot.
pub trait VoxelQuery {
    fn map_config(&self) -> &MapConfig;
    fn state(&self, key: VoxelKey) -> VoxelState;
    /// Unknown voxel inside space the robot body has physically swept.
    fn is_swept(&self, key: VoxelKey) -> bool;
}

#[derive(Clone, Debug)]
struct Block {
    voxels: [TsdfVoxel; BLOCK_VOXELS],
    swept: [u64; BLOCK_VOXELS / 64],
}

impl Block {
    fn new() -> Self {
        Block {
            voxels: [TsdfVoxel::default(); BLOCK_VOXELS],
            swept: [0; BLOCK_VOXELS / 64],
        }
    }
}

/// The robot's belief: a sparse TSDF bounded by the exploration box.
#[derive(Clone, Debug)]
pub struct VoxelMap {
    config: MapConfig,
    key_lo: VoxelKey,
    key_hi: VoxelKey,
    index: BTreeMap<BlockKey, usize>,
    blocks: Vec<Block>,
    changed: BTreeSet<VoxelKey>,
}

impl VoxelMap {
    pub fn new(config: MapConfig) -> Result<Self, MapError> {
        config.validate()?;
        let (key_lo, key_hi) = config.key_range();
        Ok(VoxelMap {
            config,
            key_lo,
            key_hi,
            index: BTreeMap::new(),
            blocks: Vec::new(),
            changed: BTreeSet::new(),
        })
    }

    pub fn config(&self) -> &MapConfig {
        &self.config
    }

    pub fn key_range(&self) -> (VoxelKey, VoxelKey) {
        (self.key_lo, self.key_hi)
    }

    pub fn in_bounds(&self, key: VoxelKey) -> bool {
        key_in(key, self.key_lo, self.key_hi)
    }

    pub fn voxel(&self, key: VoxelKey) -> TsdfVoxel {
        let (bk, i) = key.block();
        match self.index.get(&bk) {
            Some(&b) => self.blocks[b].voxels[i],
            None => TsdfVoxel::default(),
        }
    }

    pub fn classify(&self, key: VoxelKey) -> VoxelState {
        classify(&self.voxel(key), self.config.voxel_size)
    }

    fn block_index(&mut self, bk: BlockKey) -> usize {
        if let Some(&b) = self.index.get(&bk) {
            return b;
        }
        self.blocks.push(Block::new());
        let b = self.blocks.len() - 1;
        self.index.insert(bk, b);
        b
    }

    /// Merge one observation into a voxel. Keys outside the bounds are ignored.
    pub fn observe(&mut self, key: VoxelKey, distance: f64, weight: f64) {
        if !self.in_bounds(key) || !(weight > 0.0) {
            return;
        }
        let (bk, i) = key.block();
        let b = self.block_index(bk);
        self.merge_at(b, i, key, distance, weight);
    }

    fn merge_at(&mut self, b: usize, i: usize, key: VoxelKey, distance: f64, weight: f64) {
        let vs = self.config.voxel_size;
        let tau = self.config.truncation;
        let d_obs = distance.clamp(-tau, tau);
        let v = &mut self.blocks[b].voxels[i];
        let before = classify(v, vs);
        let w_new = v.weight + weight;
        v.distance = (v.weight * v.distance + weight * d_obs) / w_new;
        v.weight = w_new;
        if classify(v, vs) != before {
            self.changed.insert(key);
        }
    }

    /// Overwrite a voxel directly (test fixtures and debug loading).
    pub fn set_voxel(&mut self, key: VoxelKey, voxel: TsdfVoxel) {
        if !self.in_bounds(key) {
            return;
        }
        let (bk, i) = key.block();
        let b = self.block_index(bk);
        let before = classify(&self.blocks[b].voxels[i], self.config.voxel_size);
        self.blocks[b].voxels[i] = voxel;
        if classify(&voxel, self.config.voxel_size) != before {
            self.changed.insert(key);
        }
    }

    /// Integrate one scan taken from `sensor`.
    ///
    /// Every voxel crossed by a surface ray, up to one truncation distance
    /// behind the hit, receives the projective distance to the hit; max-range
    /// misses carve free space with `+truncation`. The observation weight is
    /// `1 / max(r, min_range)^2` with `r` the sensor-to-voxel-center distance.
    /// The scan is rejected as a whole if any point lies outside the sensor
    /// range.
    pub fn integrate_scan(&mut self, sensor: &Vec3, points: &[HitPoint]) -> Result<(), MapError> {
        let r_min = self.config.min_range;
        let r_max = self.config.max_range;
        let slack = 1e-6 * r_max.max(1.0);
        for (index, p) in points.iter().enumerate() {
            let range = (p.point - sensor).norm();
            if range < r_min - slack || range > r_max + slack {
                return Err(MapError::PointOutOfRange {
                    index,
                    range,
                    min: r_min,
                    max: r_max,
                });
            }
        }

        let tau = self.config.truncation;
        let origin = self.config.origin;
        let vs = self.config.voxel_size;
        let bounds = self.config.bounds;
        let mut cached: Option<(BlockKey, usize)> = None;
        for p in points {
            let offset = p.point - sensor;
            let hit_range = offset.norm();
            if hit_range <= 0.0 {
                continue;
            }
            let dir = offset / hit_range;
            let (end, is_hit) = match p.kind {
                HitKind::SurfaceHit => (hit_range + tau, true),
                HitKind::MaxRangeMiss => (hit_range, false),
            };
            let Some((t0, t1)) = bounds.clip_segment(sensor, &dir, end) else {
                continue;
            };
            let start = sensor + dir * t0;
            for step in VoxelTraversal::new(&origin, vs, &start, &dir, t1 - t0) {
                let key = step.key;
                if !key_in(key, self.key_lo, self.key_hi) {
                    continue;
                }
                let rel = self.config.center(key) - sensor;
                let r = rel.norm().max(r_min);
                let weight = 1.0 / (r * r);
                let d_obs = if is_hit {
                    hit_range - rel.dot(&dir)
                } else {
                    tau
                };
                let (bk, i) = key.block();
                let b = match cached {
                    Some((k, b)) if k == bk => b,
                    _ => {
                        let b = self.block_index(bk);
                        cached = Some((bk, b));
                        b
                    }
                };
                self.merge_at(b, i, key, d_obs, weight);
            }
        }
        Ok(())
    }

    /// Keys whose classification changed since the last call.
    pub fn take_changed(&mut self) -> BTreeSet<VoxelKey> {
        core::mem::take(&mut self.changed)
    }

    pub fn changed(&self) -> &BTreeSet<VoxelKey> {
        &self.changed
    }

    /// Mark unknown voxels within `radius` of `center` as swept by the robot
    /// body. Swept voxels keep their TSDF state but count as traversable for
    /// clearance checks.
    pub fn mark_swept(&mut self, center: &Vec3, radius: f64) {
        let keys: Vec<VoxelKey> = keys_within(&self.config, center, radius)
            .filter(|k| self.in_bounds(*k))
            .collect();
        for key in keys {
            let (bk, i) = key.block();
            let b = self.block_index(bk);
            self.blocks[b].swept[i / 64] |= 1u64 << (i % 64);
        }
    }

    /// Stored voxels in lexicographic key order.
    pub fn iter(&self) -> impl Iterator<Item = (VoxelKey, TsdfVoxel)> + '_ {
        let mut order: Vec<(&BlockKey, &usize)> = self.index.iter().collect();
        order.sort();
        let mut out = Vec::new();
        for (bk, &b) in order {
            for (i, v) in self.blocks[b].voxels.iter().enumerate() {
                let i = i as i32;
                let key = VoxelKey::new(
                    bk.0 * BLOCK_EDGE + i % BLOCK_EDGE,
                    bk.1 * BLOCK_EDGE + (i / BLOCK_EDGE) % BLOCK_EDGE,
                    bk.2 * BLOCK_EDGE + i / (BLOCK_EDGE * BLOCK_EDGE),
                );
                out.push((key, *v));
            }
        }
        out.sort_by_key(|(k, _)| *k);
        out.into_iter()
    }

    /// Observed voxels (weight > 0) in key order.
    pub fn observed(&self) -> impl Iterator<Item = (VoxelKey, TsdfVoxel)> + '_ {
        self.iter().filter(|(_, v)| v.weight > 0.0)
    }

    pub fn total_weight(&self) -> f64 {
        self.blocks
            .iter()
            .flat_map(|b| b.voxels.iter())
            .map(|v| v.weight)
            .sum()
    }

    pub fn allocated_blocks(&self) -> usize {
        self.blocks.len()
    }

    /// Dense classification over the bounds, for fast repeated queries.
    pub fn snapshot(&self) -> StateGrid {
        let lo = self.key_lo;
        let hi = self.key_hi;
        let dims = [
            (hi.x - lo.x + 1).max(0) as usize,
            (hi.y - lo.y + 1).max(0) as usize,
            (hi.z - lo.z + 1).max(0) as usize,
        ];
        let mut cells = vec![CELL_UNKNOWN; dims[0] * dims[1] * dims[2]];
        for (bk, &b) in &self.index {
            let block = &self.blocks[b];
            for i in 0..BLOCK_VOXELS {
                let ii = i as i32;
                let key = VoxelKey::new(
                    bk.0 * BLOCK_EDGE + ii % BLOCK_EDGE,
                    bk.1 * BLOCK_EDGE + (ii / BLOCK_EDGE) % BLOCK_EDGE,
                    bk.2 * BLOCK_EDGE + ii / (BLOCK_EDGE * BLOCK_EDGE),
                );
                if !key_in(key, lo, hi) {
                    continue;
                }
                let idx = dense_index(key, lo, dims);
                let mut c = match classify(&block.voxels[i], self.config.voxel_size) {
                    VoxelState::Unknown => CELL_UNKNOWN,
                    VoxelState::Empty => CELL_EMPTY,
                    VoxelState::Occupied => CELL_OCCUPIED,
                };
                if block.swept[i / 64] & (1u64 << (i % 64)) != 0 {
                    c |= CELL_SWEPT;
                }
                cells[idx] = c;
            }
        }
        StateGrid {
            config: self.config.clone(),
            lo,
            hi,
            dims,
            cells,
        }
    }
}

impl VoxelQuery for VoxelMap {
    fn map_config(&self) -> &MapConfig {
        &self.config
    }

    fn state(&self, key: VoxelKey) -> VoxelState {
        if !self.in_bounds(key) {
            return VoxelState::Unknown;
        }
        self.classify(key)
    }

    fn is_swept(&self, key: VoxelKey) -> bool {
        let (bk, i) = key.block();
        match self.index.get(&bk) {
            Some(&b) => self.blocks[b].swept[i / 64] & (1u64 << (i % 64)) != 0,
            None => false,
        }
    }
}

const CELL_UNKNOWN: u8 = 0;
const CELL_EMPTY: u8 = 1;
const CELL_OCCUPIED: u8 = 2;
const CELL_SWEPT: u8 = 4;

fn dense_index(key: VoxelKey, lo: VoxelKey, dims: [usize; 3]) -> usize {
    let x = (key.x - lo.x) as usize;
    let y = (key.y - lo.y) as usize;
    let z = (key.z - lo.z) as usize;
    x + dims[0] * (y + dims[1] * z)
}

/// Immutable dense snapshot of voxel states over the exploration bounds.
#[derive(Clone, Debug)]
pub struct StateGrid {
    config: MapConfig,
    lo: VoxelKey,
    hi: VoxelKey,
    dims: [usize; 3],
    cells: Vec<u8>,
}

impl StateGrid {
    #[inline]
    fn cell(&self, key: VoxelKey) -> u8 {
        if !key_in(key, self.lo, self.hi) {
            return CELL_UNKNOWN;
        }
        self.cells[dense_index(key, self.lo, self.dims)]
    }
}

impl VoxelQuery for StateGrid {
    fn map_config(&self) -> &MapConfig {
        &self.config
    }

    #[inline]
    fn state(&self, key: VoxelKey) -> VoxelState {
        match self.cell(key) & 3 {
            CELL_EMPTY => VoxelState::Empty,
            CELL_OCCUPIED => VoxelState::Occupied,
            _ => VoxelState::Unknown,
        }
    }

    fn is_swept(&self, key: VoxelKey) -> bool {
        self.cell(key) & CELL_SWEPT != 0
    }
}

/// Keys of voxels whose centers lie strictly within `radius` of `p`.
pub fn keys_within<'a>(
    config: &'a MapConfig,
    p: &Vec3,
    radius: f64,
) -> impl Iterator<Item = VoxelKey> + 'a {
    let p = *p;
    let lo = config.key_of(&(p - Vec3::repeat(radius)));
    let hi = config.key_of(&(p + Vec3::repeat(radius)));
    let r2 = radius * radius;
    (lo.z..=hi.z).flat_map(move |z| {
        (lo.y..=hi.y).flat_map(move |y| {
            (lo.x..=hi.x).filter_map(move |x| {
                let k = VoxelKey::new(x, y, z);
                ((config.center(k) - p).norm_squared() < r2).then_some(k)
            })
        })
    })
}

/// True iff every voxel whose center lies within `radius` of `position` is
/// Empty. Unknown voxels are unsafe unless swept by the robot body.
pub fn clearance_ok<M: VoxelQuery>(map: &M, position: &Vec3, radius: f64) -> bool {
    let config = map.map_config();
    let lo = config.key_of(&(position - Vec3::repeat(radius)));
    let hi = config.key_of(&(position + Vec3::repeat(radius)));
    let r2 = radius * radius;
    let vs = config.voxel_size;
    let base = config.origin + Vec3::repeat(0.5 * vs);
    for z in lo.z..=hi.z {
        let dz = base.z + z as f64 * vs - position.z;
        for y in lo.y..=hi.y {
            let dy = base.y + y as f64 * vs - position.y;
            let dyz = dy * dy + dz * dz;
            if dyz >= r2 {
                continue;
            }
            for x in lo.x..=hi.x {
                let dx = base.x + x as f64 * vs - position.x;
                if dx * dx + dyz >= r2 {
                    continue;
                }
                let key = VoxelKey::new(x, y, z);
                match map.state(key) {
                    VoxelState::Empty => {}
                    VoxelState::Occupied => return false,
                    VoxelState::Unknown => {
                        if !map.is_swept(key) {
                            return false;
                        }
                    }
                }
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sensor::HitPoint;

    fn cfg(n: f64) -> MapConfig {
        MapConfig::new(
            0.25,
            Vec3::zeros(),
            Aabb::new(Vec3::zeros(), Vec3::repeat(n)),
            0.42,
            10.0,
        )
    }

    #[test]
    fn classification_rules() {
        let vs = 0.25;
        let v = |d: f64, w: f64| TsdfVoxel { distance: d, weight: w };
        assert_eq!(classify(&v(0.7, 0.0), vs), VoxelState::Unknown);
        assert_eq!(classify(&v(0.5, 0.5), vs), VoxelState::Empty);
        assert_eq!(classify(&v(0.1, 0.5), vs), VoxelState::Occupied);
        assert_eq!(classify(&v(0.25, 0.5), vs), VoxelState::Occupied);
        assert_eq!(classify(&v(-1.0, 0.5), vs), VoxelState::Occupied);
    }

    #[test]
    fn neighbor_counts() {
        let o = VoxelKey::new(0, 0, 0);
        for (c, n, l1) in [
            (Connectivity::Six, 6, 1),
            (Connectivity::Eighteen, 18, 2),
            (Connectivity::TwentySix, 26, 3),
        ] {
            let ns: Vec<_> = neighbors(o, c).collect();
            assert_eq!(ns.len(), n);
            let set: BTreeSet<_> = ns.iter().copied().collect();
            assert_eq!(set.len(), n);
            assert!(ns
                .iter()
                .all(|k| k.x.abs() + k.y.abs() + k.z.abs() <= l1 && *k != o));
        }
    }

    #[test]
    fn weight_from_range() {
        let mut map = VoxelMap::new(cfg(8.0)).unwrap();
        let k = VoxelKey::new(3, 3, 3);
        let c = map.config().center(k);
        let sensor = c - Vec3::new(2.0, 0.0, 0.0);
        // A single miss ray along +x crossing the voxel center.
        map.integrate_scan(
            &sensor,
            &[HitPoint::miss(sensor + Vec3::new(10.0, 0.0, 0.0), Vec3::x())],
        )
        .unwrap();
        assert!((map.voxel(k).weight - 0.25).abs() < 1e-12);
    }

    #[test]
    fn equal_weight_average() {
        let mut map = VoxelMap::new(cfg(4.0)).unwrap();
        let k = VoxelKey::new(1, 1, 1);
        map.observe(k, 0.1, 1.0);
        map.observe(k, 0.3, 1.0);
        let v = map.voxel(k);
        assert!((v.weight - 2.0).abs() < 1e-12);
        assert!((v.distance - 0.2).abs() < 1e-12);
    }

    #[test]
    fn rejects_out_of_range_points() {
        let mut map = VoxelMap::new(cfg(8.0)).unwrap();
        let s = Vec3::repeat(4.0);
        let err = map
            .integrate_scan(&s, &[HitPoint::hit(s + Vec3::new(0.1, 0.0, 0.0), Vec3::x())])
            .unwrap_err();
        assert!(matches!(err, MapError::PointOutOfRange { index: 0, .. }));
        assert_eq!(map.allocated_blocks(), 0);
    }

    #[test]
    fn config_validation() {
        let mut c = cfg(4.0);
        c.truncation = 0.3;
        assert!(matches!(
            VoxelMap::new(c.clone()).unwrap_err(),
            MapError::Truncation { .. }
        ));
        c.truncation = 1.0;
        c.bounds = Aabb::new(Vec3::zeros(), Vec3::new(1.0, 0.0, 1.0));
        assert_eq!(VoxelMap::new(c).unwrap_err(), MapError::DegenerateBounds);
    }

    #[test]
    fn clearance_against_single_occupied_voxel() {
        let mut map = VoxelMap::new(cfg(8.0)).unwrap();
        let (lo, hi) = map.key_range();
        for x in lo.x..=hi.x {
            for y in lo.y..=hi.y {
                for z in lo.z..=hi.z {
                    map.set_voxel(VoxelKey::new(x, y, z), TsdfVoxel { distance: 1.0, weight: 1.0 });
                }
            }
        }
        let occ = VoxelKey::new(10, 10, 10);
        map.set_voxel(occ, TsdfVoxel { distance: 0.0, weight: 1.0 });
        let c = map.config().center(occ);
        assert!(clearance_ok(&map, &(c + Vec3::new(3.0, 0.0, 0.0)), 1.0));
        assert!(!clearance_ok(&map, &c, 1.0));
        let snap = map.snapshot();
        assert!(clearance_ok(&snap, &(c + Vec3::new(3.0, 0.0, 0.0)), 1.0));
        assert!(!clearance_ok(&snap, &c, 1.0));
    }

    #[test]
    fn swept_unknown_counts_as_traversable() {
        let mut map = VoxelMap::new(cfg(8.0)).unwrap();
        let p = Vec3::repeat(4.0);
        assert!(!clearance_ok(&map, &p, 1.0));
        map.mark_swept(&p, 1.0);
        assert!(clearance_ok(&map, &p, 1.0));
        assert!(clearance_ok(&map.snapshot(), &p, 1.0));
        assert_eq!(map.classify(map.config().key_of(&p)), VoxelState::Unknown);
    }

    #[test]
    fn iteration_is_key_ordered() {
        let mut map = VoxelMap::new(cfg(8.0)).unwrap();
        map.observe(VoxelKey::new(20, 1, 1), 0.5, 1.0);
        map.observe(VoxelKey::new(1, 1, 1), 0.5, 1.0);
        let obs: Vec<_> = map.observed().map(|(k, _)| k).collect();
        assert_eq!(obs, [VoxelKey::new(1, 1, 1), VoxelKey::new(20, 1, 1)]);
    }
}
