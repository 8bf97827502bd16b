//! Surface frontiers (incomplete surface elements) and the set of frontiers
//! known to be unscannable.
//!
//! A voxel is a surface frontier when it is Empty, has an Unknown face
//! neighbour and has an Occupied neighbour within the 18-neighbourhood.
//! Neighbours outside the exploration bounds are ignored.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::geometry::Vec3;
use crate::tsdf::{neighbors, Connectivity, VoxelKey, VoxelMap, VoxelQuery, VoxelState};

const NORMAL_EPS: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Frontier {
    pub key: VoxelKey,
    /// Unit surface normal; `None` when the weighted sum cancels out.
    pub normal: Option<Vec3>,
    pub reachable: bool,
}

pub fn is_frontier<M: VoxelQuery>(map: &M, key: VoxelKey) -> bool {
    let config = map.map_config();
    if !config.in_bounds(key) || map.state(key) != VoxelState::Empty {
        return false;
    }
    let unknown_face = neighbors(key, Connectivity::Six)
        .any(|n| config.in_bounds(n) && map.state(n) == VoxelState::Unknown);
    unknown_face
        && neighbors(key, Connectivity::Eighteen).any(|n| map.state(n) == VoxelState::Occupied)
}

/// Uncertainty-weighted normal from all 26 neighbours: occupied neighbours
/// pull with negative weight, everything else pushes with its weight.
pub fn surface_normal(map: &VoxelMap, key: VoxelKey) -> Option<Vec3> {
    let vs = map.config().voxel_size;
    let mut sum = Vec3::zeros();
    for d in Connectivity::TwentySix.offsets() {
        let n = key.offset(*d);
        let v = map.voxel(n);
        if v.weight <= 0.0 {
            continue;
        }
        let w = match crate::tsdf::classify(&v, vs) {
            VoxelState::Occupied => -v.weight,
            _ => v.weight,
        };
        let dir = Vec3::new(d[0] as f64, d[1] as f64, d[2] as f64);
        sum += dir.normalize() * w;
    }
    let n = sum.norm();
    (n >= NORMAL_EPS).then(|| sum / n)
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct FrontierSet {
    frontiers: BTreeMap<VoxelKey, Frontier>,
    remaining: BTreeSet<VoxelKey>,
}

impl FrontierSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Full rescan of the bounded map.
    pub fn extract(map: &VoxelMap) -> Self {
        let snap = map.snapshot();
        let (lo, hi) = map.key_range();
        let mut frontiers = BTreeMap::new();
        for x in lo.x..=hi.x {
            for y in lo.y..=hi.y {
                for z in lo.z..=hi.z {
                    let key = VoxelKey::new(x, y, z);
                    if is_frontier(&snap, key) {
                        frontiers.insert(key, frontier_at(map, key));
                    }
                }
            }
        }
        FrontierSet {
            frontiers,
            remaining: BTreeSet::new(),
        }
    }

    /// Re-test only voxels near classification changes since the last update,
    /// clear unreachable marks whose neighbourhood changed, and refresh all
    /// normals.
    pub fn update(&mut self, map: &mut VoxelMap) {
        let changed = map.take_changed();
        let snap = map.snapshot();
        let mut touched = BTreeSet::new();
        for k in &changed {
            touched.insert(*k);
            touched.extend(neighbors(*k, Connectivity::TwentySix));
        }
        for key in touched {
            self.remaining.remove(&key);
            if is_frontier(&snap, key) {
                self.frontiers.insert(key, frontier_at(map, key));
            } else {
                self.frontiers.remove(&key);
            }
        }
        for f in self.frontiers.values_mut() {
            f.normal = surface_normal(map, f.key);
        }
    }

    /// Move a frontier to the unreachable set.
    pub fn mark_unreachable(&mut self, key: VoxelKey) {
        if self.frontiers.remove(&key).is_some() {
            self.remaining.insert(key);
        } else if !self.remaining.contains(&key) {
            log::warn!("mark_unreachable: {key} is not a frontier");
        }
    }

    pub fn get(&self, key: &VoxelKey) -> Option<&Frontier> {
        self.frontiers.get(key)
    }

    /// Reachable frontiers in key order.
    pub fn iter(&self) -> impl Iterator<Item = &Frontier> + '_ {
        self.frontiers.values()
    }

    pub fn keys(&self) -> impl Iterator<Item = VoxelKey> + '_ {
        self.frontiers.keys().copied()
    }

    pub fn len(&self) -> usize {
        self.frontiers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frontiers.is_empty()
    }

    pub fn contains(&self, key: &VoxelKey) -> bool {
        self.frontiers.contains_key(key)
    }

    pub fn remaining(&self) -> &BTreeSet<VoxelKey> {
        &self.remaining
    }

    pub fn is_unreachable(&self, key: &VoxelKey) -> bool {
        self.remaining.contains(key)
    }

    /// Reachable frontiers followed by unreachable ones, with normals, for
    /// reporting.
    pub fn all_with_normals(&self, map: &VoxelMap) -> Vec<Frontier> {
        let mut out: Vec<Frontier> = self.frontiers.values().copied().collect();
        out.extend(self.remaining.iter().map(|&key| Frontier {
            key,
            normal: surface_normal(map, key),
            reachable: false,
        }));
        out
    }
}

fn frontier_at(map: &VoxelMap, key: VoxelKey) -> Frontier {
    Frontier {
        key,
        normal: surface_normal(map, key),
        reachable: true,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Aabb;
    use crate::tsdf::{MapConfig, TsdfVoxel};

    fn map(n: f64) -> VoxelMap {
        VoxelMap::new(MapConfig::new(
            0.25,
            Vec3::zeros(),
            Aabb::new(Vec3::zeros(), Vec3::repeat(n)),
            0.42,
            10.0,
        ))
        .unwrap()
    }

    const OCC: TsdfVoxel = TsdfVoxel {
        distance: 0.0,
        weight: 1.0,
    };
    const FREE: TsdfVoxel = TsdfVoxel {
        distance: 1.0,
        weight: 1.0,
    };

    #[test]
    fn unknown_map_has_no_frontiers() {
        assert!(FrontierSet::extract(&map(2.0)).is_empty());
    }

    #[test]
    fn single_occupied_neighbor_normal() {
        let mut m = map(2.0);
        let k = VoxelKey::new(3, 3, 3);
        m.set_voxel(k, FREE);
        m.set_voxel(k.offset([-1, 0, 0]), OCC);
        let n = surface_normal(&m, k).unwrap();
        assert!((n - Vec3::x()).norm() < 1e-12);
    }

    #[test]
    fn symmetric_neighbors_cancel() {
        let mut m = map(2.0);
        let k = VoxelKey::new(3, 3, 3);
        m.set_voxel(k, FREE);
        m.set_voxel(k.offset([-1, 0, 0]), OCC);
        m.set_voxel(k.offset([1, 0, 0]), OCC);
        assert!(surface_normal(&m, k).is_none());
    }

    #[test]
    fn marking_is_idempotent_and_reset_by_change() {
        let mut m = map(2.0);
        let k = VoxelKey::new(3, 3, 3);
        m.set_voxel(k, FREE);
        m.set_voxel(k.offset([-1, 0, 0]), OCC);
        let mut fs = FrontierSet::new();
        fs.update(&mut m);
        assert!(fs.contains(&k));
        fs.mark_unreachable(k);
        fs.mark_unreachable(k);
        assert!(!fs.contains(&k) && fs.is_unreachable(&k));
        assert_eq!(fs.remaining().len(), 1);
        // No change: mark persists.
        fs.update(&mut m);
        assert!(fs.is_unreachable(&k));
        // A neighbour becomes observed: mark cleared, frontier re-tested.
        m.set_voxel(k.offset([0, 1, 0]), FREE);
        fs.update(&mut m);
        assert!(!fs.is_unreachable(&k));
        assert!(fs.contains(&k));
    }

    #[test]
    fn marking_absent_key_is_noop() {
        let mut fs = FrontierSet::new();
        fs.mark_unreachable(VoxelKey::new(0, 0, 0));
        assert!(fs.remaining().is_empty());
    }
}
