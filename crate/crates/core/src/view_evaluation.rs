//! Candidate scoring: occlusion-aware information gain plus a navigation
//! utility, and deterministic argmax selection.

use alloc::vec::Vec;
use core::cmp::Ordering;
use core::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::frontier::FrontierSet;
use crate::geometry::Vec3;
use crate::quality::QualityConfig;
use crate::raycast::VoxelTraversal;
use crate::tsdf::{VoxelKey, VoxelQuery, VoxelState};
use crate::view_generation::ViewCandidate;

/// Speed below which the robot is treated as stationary (m/s).
pub const EPS_VELOCITY: f64 = 0.01;

pub const DEFAULT_ALPHA: f64 = 0.5;
pub const DEFAULT_BETA: f64 = 0.5;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RobotState {
    pub position: Vec3,
    pub velocity: Vec3,
    pub yaw: f64,
}

impl RobotState {
    pub fn at_rest(position: Vec3) -> Self {
        RobotState {
            position,
            velocity: Vec3::zeros(),
            yaw: 0.0,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ScoreBreakdown {
    /// Unnormalized gain: sum of distance weight times visibility.
    pub j_raw: f64,
    /// Frontiers in range with an unoccluded ray.
    pub visible: usize,
    pub j_info: f64,
    pub j_nav: f64,
    pub total: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Visibility {
    pub occluded: bool,
    pub unknown: u32,
}

impl Visibility {
    pub fn value(&self) -> f64 {
        if self.occluded {
            0.0
        } else {
            libm::exp(-(self.unknown as f64))
        }
    }
}

/// Walk the ray from `from` to the center of `target`, skipping the target
/// voxel itself.
pub fn visibility<M: VoxelQuery>(map: &M, from: &Vec3, target: VoxelKey) -> Visibility {
    let config = map.map_config();
    let to = config.center(target);
    let mut unknown = 0;
    for step in VoxelTraversal::between(&config.origin, config.voxel_size, from, &to) {
        if step.key == target {
            continue;
        }
        match map.state(step.key) {
            VoxelState::Occupied => {
                return Visibility {
                    occluded: true,
                    unknown,
                }
            }
            VoxelState::Unknown => unknown += 1,
            VoxelState::Empty => {}
        }
    }
    Visibility {
        occluded: false,
        unknown,
    }
}

/// Preference for observing from inside the quality interval. Interval
/// boundaries count as inside.
pub fn distance_weight(d: f64, q: &QualityConfig) -> f64 {
    let (lo, hi) = q.interval();
    if d < lo {
        0.5
    } else if d > hi {
        0.5 * (1.0 - d / q.r_max)
    } else {
        1.0
    }
}

/// Raw gain of observing every frontier within sensor range from `position`,
/// and the number of unoccluded ones.
pub fn info_gain<M: VoxelQuery>(
    map: &M,
    position: &Vec3,
    frontiers: &FrontierSet,
    q: &QualityConfig,
) -> (f64, usize) {
    let config = map.map_config();
    let r2 = q.r_max * q.r_max;
    let mut j = 0.0;
    let mut visible = 0;
    for f in frontiers.iter() {
        let c = config.center(f.key);
        let d2 = (c - position).norm_squared();
        if d2 > r2 {
            continue;
        }
        let vis = visibility(map, position, f.key);
        if vis.occluded {
            continue;
        }
        visible += 1;
        j += distance_weight(libm::sqrt(d2), q) * vis.value();
    }
    (j, visible)
}

/// Heading agreement in `[0, 1]`: one when moving toward `dir`, zero when
/// moving away, one when stationary.
pub fn heading_factor(velocity: &Vec3, dir: &Vec3) -> f64 {
    let speed = velocity.norm();
    let len = dir.norm();
    if speed < EPS_VELOCITY || len == 0.0 {
        return 1.0;
    }
    let c = (velocity.dot(dir) / (speed * len)).clamp(-1.0, 1.0);
    1.0 - libm::acos(c) / PI
}

/// Navigation utility of reaching `target` given the nearest candidate
/// distance `nearest`. Within `eps_dist` of the robot only heading counts.
pub fn nav_score(state: &RobotState, target: &Vec3, nearest: f64, eps_dist: f64) -> f64 {
    let dir = target - state.position;
    let psi = heading_factor(&state.velocity, &dir);
    let d = dir.norm();
    if d < eps_dist {
        return psi;
    }
    psi * nearest / d
}

/// Score every candidate. The information term is normalized by the largest
/// unoccluded-frontier count in the batch.
pub fn score_candidates<M: VoxelQuery>(
    map: &M,
    candidates: &[ViewCandidate],
    frontiers: &FrontierSet,
    q: &QualityConfig,
    state: &RobotState,
    alpha: f64,
    beta: f64,
) -> Vec<ScoreBreakdown> {
    let raw: Vec<(f64, usize)> = candidates
        .iter()
        .map(|c| info_gain(map, &c.position, frontiers, q))
        .collect();
    combine_scores(map.map_config().voxel_size, candidates, &raw, state, alpha, beta)
}

/// Batch normalization and navigation term for precomputed raw gains.
pub fn combine_scores(
    eps_dist: f64,
    candidates: &[ViewCandidate],
    raw: &[(f64, usize)],
    state: &RobotState,
    alpha: f64,
    beta: f64,
) -> Vec<ScoreBreakdown> {
    let max_visible = raw.iter().map(|r| r.1).max().unwrap_or(0);
    let nearest = candidates
        .iter()
        .map(|c| (c.position - state.position).norm())
        .fold(f64::INFINITY, f64::min);
    candidates
        .iter()
        .zip(raw)
        .map(|(c, &(j_raw, visible))| {
            let j_info = if max_visible > 0 {
                j_raw / max_visible as f64
            } else {
                0.0
            };
            let j_nav = nav_score(state, &c.position, nearest, eps_dist);
            ScoreBreakdown {
                j_raw,
                visible,
                j_info,
                j_nav,
                total: alpha * j_info + beta * j_nav,
            }
        })
        .collect()
}

/// Ordering used by every planner: larger key first, then nearer candidate,
/// then smaller frontier key.
fn tie_break(a: &ViewCandidate, b: &ViewCandidate, from: &Vec3) -> Ordering {
    let da = (a.position - from).norm();
    let db = (b.position - from).norm();
    da.total_cmp(&db).then(a.frontier_key.cmp(&b.frontier_key))
}

/// Index of the best candidate by `key` (maximized), with deterministic tie
/// breaking.
pub fn select_by<F: Fn(usize) -> f64>(candidates: &[ViewCandidate], from: &Vec3, key: F) -> Option<usize> {
    let mut best: Option<usize> = None;
    for i in 0..candidates.len() {
        best = match best {
            None => Some(i),
            Some(b) => {
                let ord = key(i)
                    .total_cmp(&key(b))
                    .then_with(|| tie_break(&candidates[b], &candidates[i], from));
                if ord == Ordering::Greater {
                    Some(i)
                } else {
                    Some(b)
                }
            }
        };
    }
    best
}

pub fn select_best(candidates: &[ViewCandidate], scores: &[ScoreBreakdown], from: &Vec3) -> Option<usize> {
    select_by(candidates, from, |i| scores[i].total)
}
