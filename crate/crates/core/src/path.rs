//! Collision-free paths for a spherical robot through the known map.
//!
//! A voxel blocks the robot when it is Occupied, or Unknown and not swept.
//! Segment checks are exact: no blocking voxel center lies strictly within the
//! robot radius of any point of the segment.

use alloc::collections::BinaryHeap;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::Vec3;
use crate::tsdf::{clearance_ok, Connectivity, MapConfig, VoxelKey, VoxelQuery, VoxelState};

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
pub enum PathError {
    #[error("no collision-free path to the goal")]
    NoPath,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Path {
    pub points: Vec<Vec3>,
}

impl Path {
    pub fn length(&self) -> f64 {
        self.points.windows(2).map(|w| (w[1] - w[0]).norm()).sum()
    }

    /// Point at arc length `s` and the unit tangent of its segment.
    pub fn sample(&self, s: f64) -> (Vec3, Vec3) {
        let mut left = s.max(0.0);
        let mut tangent = Vec3::zeros();
        for w in self.points.windows(2) {
            let seg = w[1] - w[0];
            let len = seg.norm();
            if len == 0.0 {
                continue;
            }
            tangent = seg / len;
            if left <= len {
                return (w[0] + tangent * left, tangent);
            }
            left -= len;
        }
        (*self.points.last().unwrap_or(&Vec3::zeros()), tangent)
    }
}

#[inline]
fn blocked<M: VoxelQuery>(map: &M, key: VoxelKey) -> bool {
    match map.state(key) {
        VoxelState::Empty => false,
        VoxelState::Occupied => true,
        VoxelState::Unknown => !map.is_swept(key),
    }
}

fn point_segment_dist2(p: &Vec3, a: &Vec3, b: &Vec3) -> f64 {
    let ab = b - a;
    let l2 = ab.norm_squared();
    let t = if l2 > 0.0 {
        ((p - a).dot(&ab) / l2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    (p - (a + ab * t)).norm_squared()
}

/// True iff the robot sphere can sweep the straight segment `a`-`b`.
pub fn segment_clear<M: VoxelQuery>(map: &M, a: &Vec3, b: &Vec3, radius: f64) -> bool {
    let config = map.map_config();
    let lo = config.key_of(&(a.inf(b) - Vec3::repeat(radius)));
    let hi = config.key_of(&(a.sup(b) + Vec3::repeat(radius)));
    let r2 = radius * radius;
    for z in lo.z..=hi.z {
        for y in lo.y..=hi.y {
            for x in lo.x..=hi.x {
                let k = VoxelKey::new(x, y, z);
                if point_segment_dist2(&config.center(k), a, b) < r2 && blocked(map, k) {
                    return false;
                }
            }
        }
    }
    true
}

#[derive(Clone, Copy, Debug)]
struct Open {
    f: f64,
    idx: usize,
}

impl PartialEq for Open {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Open {}
impl PartialOrd for Open {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Open {
    // Min-heap on f, then index.
    fn cmp(&self, other: &Self) -> Ordering {
        other.f.total_cmp(&self.f).then(other.idx.cmp(&self.idx))
    }
}

/// Voxel offsets (relative to the edge start) that lie within `radius` of an
/// edge to a 26-neighbour but outside both endpoint spheres.
fn edge_extras(vs: f64, radius: f64) -> Vec<Vec<[i32; 3]>> {
    let r = libm::ceil(radius / vs) as i32 + 1;
    let r2 = radius * radius;
    Connectivity::TwentySix
        .offsets()
        .iter()
        .map(|d| {
            let b = Vec3::new(d[0] as f64, d[1] as f64, d[2] as f64) * vs;
            let mut out = Vec::new();
            for z in -r..=r + 1 {
                for y in -r..=r + 1 {
                    for x in -r..=r + 1 {
                        let p = Vec3::new(x as f64, y as f64, z as f64) * vs;
                        if point_segment_dist2(&p, &Vec3::zeros(), &b) < r2
                            && p.norm_squared() >= r2
                            && (p - b).norm_squared() >= r2
                        {
                            out.push([x, y, z]);
                        }
                    }
                }
            }
            out
        })
        .collect()
}

struct Grid<'a, M> {
    map: &'a M,
    config: &'a MapConfig,
    lo: VoxelKey,
    dims: [usize; 3],
    radius: f64,
    // 0 unknown, 1 free, 2 blocked
    node: Vec<u8>,
}

impl<'a, M: VoxelQuery> Grid<'a, M> {
    fn index(&self, k: VoxelKey) -> Option<usize> {
        let x = k.x - self.lo.x;
        let y = k.y - self.lo.y;
        let z = k.z - self.lo.z;
        if x < 0 || y < 0 || z < 0 {
            return None;
        }
        let (x, y, z) = (x as usize, y as usize, z as usize);
        if x >= self.dims[0] || y >= self.dims[1] || z >= self.dims[2] {
            return None;
        }
        Some(x + self.dims[0] * (y + self.dims[1] * z))
    }

    fn key(&self, i: usize) -> VoxelKey {
        let x = i % self.dims[0];
        let y = (i / self.dims[0]) % self.dims[1];
        let z = i / (self.dims[0] * self.dims[1]);
        VoxelKey::new(
            self.lo.x + x as i32,
            self.lo.y + y as i32,
            self.lo.z + z as i32,
        )
    }

    fn node_free(&mut self, i: usize) -> bool {
        if self.node[i] == 0 {
            let c = self.config.center(self.key(i));
            self.node[i] = if clearance_ok(self.map, &c, self.radius) { 1 } else { 2 };
        }
        self.node[i] == 1
    }
}

/// Shortest collision-free polyline from `from` to `to`.
///
/// A straight segment is used when it is clear. Otherwise A* runs over voxel
/// centers with 26-connectivity, and the result is shortened greedily.
pub fn plan_path<M: VoxelQuery>(map: &M, from: &Vec3, to: &Vec3, radius: f64) -> Result<Path, PathError> {
    if segment_clear(map, from, to, radius) {
        return Ok(Path {
            points: vec![*from, *to],
        });
    }
    let config = map.map_config();
    let (lo, hi) = config.key_range();
    let dims = [
        (hi.x - lo.x + 1).max(0) as usize,
        (hi.y - lo.y + 1).max(0) as usize,
        (hi.z - lo.z + 1).max(0) as usize,
    ];
    let n = dims[0] * dims[1] * dims[2];
    let mut grid = Grid {
        map,
        config,
        lo,
        dims,
        radius,
        node: vec![0; n],
    };
    let extras = edge_extras(config.voxel_size, radius);
    let offsets = Connectivity::TwentySix.offsets();

    let attach = |grid: &mut Grid<'_, M>, p: &Vec3| -> Vec<usize> {
        let k = config.key_of(p);
        let mut out = Vec::new();
        for dz in -1..=1 {
            for dy in -1..=1 {
                for dx in -1..=1 {
                    if let Some(i) = grid.index(k.offset([dx, dy, dz])) {
                        if grid.node_free(i) && segment_clear(map, p, &config.center(grid.key(i)), radius) {
                            out.push(i);
                        }
                    }
                }
            }
        }
        out
    };
    let starts = attach(&mut grid, from);
    let goals = attach(&mut grid, to);
    if starts.is_empty() || goals.is_empty() {
        return Err(PathError::NoPath);
    }
    let mut is_goal = vec![false; n];
    for &g in &goals {
        is_goal[g] = true;
    }

    let h = |c: &Vec3| (c - to).norm();
    let mut g_cost = vec![f64::INFINITY; n];
    let mut parent = vec![usize::MAX; n];
    let mut closed = vec![false; n];
    let mut open = BinaryHeap::new();
    for &s in &starts {
        let c = config.center(grid.key(s));
        let g = (c - from).norm();
        if g < g_cost[s] {
            g_cost[s] = g;
            open.push(Open { f: g + h(&c), idx: s });
        }
    }

    let mut reached = None;
    while let Some(Open { idx, .. }) = open.pop() {
        if closed[idx] {
            continue;
        }
        closed[idx] = true;
        if is_goal[idx] {
            reached = Some(idx);
            break;
        }
        let key = grid.key(idx);
        let here = config.center(key);
        'dirs: for (d, extra) in offsets.iter().zip(&extras) {
            let Some(j) = grid.index(key.offset(*d)) else {
                continue;
            };
            if closed[j] || !grid.node_free(j) {
                continue;
            }
            for o in extra {
                if blocked(map, key.offset(*o)) {
                    continue 'dirs;
                }
            }
            let there = config.center(grid.key(j));
            let g = g_cost[idx] + (there - here).norm();
            if g < g_cost[j] {
                g_cost[j] = g;
                parent[j] = idx;
                open.push(Open { f: g + h(&there), idx: j });
            }
        }
    }
    let end = reached.ok_or(PathError::NoPath)?;

    let mut chain = Vec::new();
    let mut i = end;
    while i != usize::MAX {
        chain.push(config.center(grid.key(i)));
        i = parent[i];
    }
    chain.push(*from);
    chain.reverse();
    chain.push(*to);
    Ok(Path {
        points: shorten(map, &chain, radius),
    })
}

/// Greedy shortcutting: from each kept vertex, extend while the direct
/// segment stays clear.
fn shorten<M: VoxelQuery>(map: &M, pts: &[Vec3], radius: f64) -> Vec<Vec3> {
    let mut out = vec![pts[0]];
    let mut i = 0;
    while i + 1 < pts.len() {
        let mut j = i + 1;
        while j + 1 < pts.len() && segment_clear(map, &pts[i], &pts[j + 1], radius) {
            j += 1;
        }
        out.push(pts[j]);
        i = j;
    }
    out
}
