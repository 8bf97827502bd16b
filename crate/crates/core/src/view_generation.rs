//! One safe view candidate per frontier, sampled along the frontier normal.
//!
//! Distances are tried in the order optimal, close, long. At each distance the
//! sampling direction is first corrected into the sensor's vertical field of
//! view, then rotated about the vertical axis through the frontier until a
//! collision-free position is found.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::frontier::{Frontier, FrontierSet};
use crate::geometry::{azimuth, deg, elevation, from_angles, Vec3};
use crate::quality::QualityConfig;
use crate::sensor::SensorModel;
use crate::tsdf::{clearance_ok, VoxelKey, VoxelQuery};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Band {
    Optimal,
    Close,
    Long,
}

impl Band {
    pub fn name(self) -> &'static str {
        match self {
            Band::Optimal => "optimal",
            Band::Close => "close",
            Band::Long => "long",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ViewCandidate {
    pub position: Vec3,
    /// Unit vector from the position toward the frontier.
    pub view_dir: Vec3,
    pub frontier_key: VoxelKey,
    pub band: Band,
    pub yaw: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenerationSchedule {
    pub close: f64,
    pub optimal: f64,
    pub long: f64,
    pub horizontal_step: f64,
    /// Rotations tried after the unrotated direction.
    pub max_horizontal_rotations: usize,
    /// Largest allowed elevation magnitude of the sampling direction.
    pub vertical_limit: f64,
    pub robot_radius: f64,
}

pub const DEFAULT_HORIZONTAL_STEP_DEG: f64 = 30.0;
pub const DEFAULT_HORIZONTAL_ROTATIONS: usize = 11;
pub const DEFAULT_ROBOT_RADIUS: f64 = 1.0;

impl GenerationSchedule {
    pub fn new(q: &QualityConfig, sensor: &SensorModel, robot_radius: f64) -> Self {
        let (lo, hi) = q.interval();
        GenerationSchedule {
            close: q.r_min.max(0.5 * lo + 0.5 * q.r_min),
            optimal: q.d_star,
            long: q.r_max.min(hi + 0.5 * (q.r_max - hi)),
            horizontal_step: deg(DEFAULT_HORIZONTAL_STEP_DEG),
            max_horizontal_rotations: DEFAULT_HORIZONTAL_ROTATIONS,
            // The candidate looks back along the sampling direction, so its
            // elevation must fit both FoV limits mirrored.
            vertical_limit: sensor.vert_max.min(-sensor.vert_min),
            robot_radius,
        }
    }

    /// Distances in the order they are tried.
    pub fn bands(&self) -> [(Band, f64); 3] {
        [
            (Band::Optimal, self.optimal),
            (Band::Close, self.close),
            (Band::Long, self.long),
        ]
    }
}

/// Horizontal offset of rotation attempt `k`: 0, +s, -s, +2s, -2s, ...
pub fn rotation_offset(attempt: usize, step: f64) -> f64 {
    if attempt == 0 {
        return 0.0;
    }
    let mag = attempt.div_ceil(2) as f64 * step;
    if attempt % 2 == 1 {
        mag
    } else {
        -mag
    }
}

/// Sampling direction for `attempt`: the normal with its elevation clamped to
/// `[-vertical_limit, vertical_limit]`, rotated about the vertical axis.
pub fn rotation_fallback(normal: &Vec3, attempt: usize, step: f64, vertical_limit: f64) -> Vec3 {
    let el = elevation(normal).clamp(-vertical_limit, vertical_limit);
    let az = if libm::hypot(normal.x, normal.y) < 1e-12 {
        0.0
    } else {
        azimuth(normal)
    };
    from_angles(az + rotation_offset(attempt, step), el)
}

/// First safe candidate for one frontier, or `None` if the schedule is
/// exhausted.
pub fn generate_view<M: VoxelQuery>(
    map: &M,
    frontier: &Frontier,
    schedule: &GenerationSchedule,
) -> Option<ViewCandidate> {
    let normal = frontier.normal?;
    let config = map.map_config();
    let target = config.center(frontier.key);
    for (band, dist) in schedule.bands() {
        for attempt in 0..=schedule.max_horizontal_rotations {
            let dir = rotation_fallback(&normal, attempt, schedule.horizontal_step, schedule.vertical_limit);
            let position = target + dir * dist;
            if !config.bounds.contains(&position) {
                continue;
            }
            if !clearance_ok(map, &position, schedule.robot_radius) {
                continue;
            }
            let view_dir = -dir;
            return Some(ViewCandidate {
                position,
                view_dir,
                frontier_key: frontier.key,
                band,
                yaw: azimuth(&view_dir),
            });
        }
    }
    None
}

/// Candidates kept across planning rounds while still valid.
#[derive(Clone, Debug, Default)]
pub struct ViewCache {
    entries: BTreeMap<VoxelKey, ViewCandidate>,
}

impl ViewCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn invalidate(&mut self, key: &VoxelKey) {
        self.entries.remove(key);
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// One candidate per reachable frontier, in frontier key order. Frontiers for
/// which the schedule fails are moved to the unreachable set.
pub fn generate_views<M: VoxelQuery>(
    map: &M,
    frontiers: &mut FrontierSet,
    schedule: &GenerationSchedule,
    cache: &mut ViewCache,
) -> Vec<ViewCandidate> {
    cache.entries.retain(|k, _| frontiers.contains(k));
    let mut out = Vec::new();
    let mut failed = Vec::new();
    for f in frontiers.iter() {
        if let Some(c) = cache.entries.get(&f.key) {
            if clearance_ok(map, &c.position, schedule.robot_radius) {
                out.push(*c);
                continue;
            }
        }
        match generate_view(map, f, schedule) {
            Some(c) => {
                cache.entries.insert(f.key, c);
                out.push(c);
            }
            None => failed.push(f.key),
        }
    }
    for k in failed {
        cache.entries.remove(&k);
        frontiers.mark_unreachable(k);
    }
    out
}
