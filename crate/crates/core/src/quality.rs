//! Reconstruction quality: the confidence objective, the quality target to
//! viewing distance mapping, and the a-posteriori score against ground truth.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::frontier::FrontierSet;
use crate::metrics::{check_alignment, MetricsError};
use crate::scene::GroundTruthScene;
use crate::tsdf::{neighbors, Connectivity, VoxelMap, VoxelQuery, VoxelState};

pub const DEFAULT_ETA: f64 = 0.5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QualityError {
    #[error("quality target must lie in (0, 1], got {0}")]
    Target(f64),
    #[error("sensor range invalid: [{0}, {1}]")]
    Range(f64, f64),
    #[error("distance interval [{lo}, {hi}] is not inside (0, {r_max}]")]
    Interval { lo: f64, hi: f64, r_max: f64 },
    #[error("distance band [{0}, {1}] is empty or reversed")]
    Band(f64, f64),
}

/// Distance at which a single observation reaches confidence `z_star` under
/// the `1/r^2` weight model, clamped to the sensor range. A zero target maps
/// to the maximum range.
pub fn optimal_distance(z_star: f64, r_min: f64, r_max: f64) -> Result<f64, QualityError> {
    if !(r_min > 0.0 && r_max > r_min) {
        return Err(QualityError::Range(r_min, r_max));
    }
    if z_star == 0.0 {
        return Ok(r_max);
    }
    if !(z_star > 0.0 && z_star <= 1.0) {
        return Err(QualityError::Target(z_star));
    }
    Ok(libm::sqrt(1.0 / z_star).clamp(r_min, r_max))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QualityConfig {
    /// Target per-voxel confidence.
    pub z_star: f64,
    /// Saturation cap for the objective; equal to the target.
    pub w_max: f64,
    /// Optimal viewing distance (m).
    pub d_star: f64,
    /// Half-width of the optimal distance interval (m).
    pub eta: f64,
    pub r_min: f64,
    pub r_max: f64,
}

impl QualityConfig {
    pub fn from_target(z_star: f64, eta: f64, r_min: f64, r_max: f64) -> Result<Self, QualityError> {
        let d_star = optimal_distance(z_star, r_min, r_max)?;
        let q = QualityConfig {
            z_star,
            w_max: z_star,
            d_star,
            eta,
            r_min,
            r_max,
        };
        q.validate()?;
        Ok(q)
    }

    /// Target reached by one observation at `distance`.
    pub fn from_distance(distance: f64, eta: f64, r_min: f64, r_max: f64) -> Result<Self, QualityError> {
        if !(distance > 0.0) {
            return Err(QualityError::Band(distance, distance));
        }
        Self::from_target(1.0 / (distance * distance), eta, r_min, r_max)
    }

    /// Distance band `[lo, hi]`: `d* = (lo + hi) / 2`, `eta = (hi - lo) / 2`.
    pub fn from_band(lo: f64, hi: f64, r_min: f64, r_max: f64) -> Result<Self, QualityError> {
        if !(hi > lo && lo > 0.0) {
            return Err(QualityError::Band(lo, hi));
        }
        if !(r_min > 0.0 && r_max > r_min) {
            return Err(QualityError::Range(r_min, r_max));
        }
        let d_star = 0.5 * (lo + hi);
        let z_star = 1.0 / (d_star * d_star);
        if !(z_star <= 1.0) {
            return Err(QualityError::Target(z_star));
        }
        let q = QualityConfig {
            z_star,
            w_max: z_star,
            d_star: d_star.clamp(r_min, r_max),
            eta: 0.5 * (hi - lo),
            r_min,
            r_max,
        };
        q.validate()?;
        Ok(q)
    }

    pub fn validate(&self) -> Result<(), QualityError> {
        let (lo, hi) = self.interval();
        if !(self.eta > 0.0 && lo > 0.0 && hi <= self.r_max + 1e-12) {
            return Err(QualityError::Interval {
                lo,
                hi,
                r_max: self.r_max,
            });
        }
        Ok(())
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.d_star - self.eta, self.d_star + self.eta)
    }
}

/// Completeness factor: one once no reachable frontier remains.
pub fn completeness(frontiers: &FrontierSet) -> f64 {
    if frontiers.is_empty() {
        1.0
    } else {
        0.0
    }
}

/// Mean confidence over the bounded domain, gated by completeness.
pub fn quality_z(map: &VoxelMap, frontiers: &FrontierSet) -> f64 {
    let xi = completeness(frontiers);
    if xi == 0.0 {
        return 0.0;
    }
    let n = map.config().domain_size();
    if n == 0 {
        return 0.0;
    }
    xi * map.total_weight() / n as f64
}

/// As [`quality_z`] with each weight saturated at `w_max`.
pub fn quality_z_sat(map: &VoxelMap, frontiers: &FrontierSet, w_max: f64) -> f64 {
    let xi = completeness(frontiers);
    if xi == 0.0 {
        return 0.0;
    }
    let n = map.config().domain_size();
    if n == 0 {
        return 0.0;
    }
    let sum: f64 = map.observed().map(|(_, v)| v.weight.min(w_max)).sum();
    xi * sum / n as f64
}

/// A-posteriori confidence: the summed weight of the reconstructed surface
/// voxels divided by the ground-truth surface voxel count.
///
/// Reconstructed surface voxels are Occupied voxels with at least one in-bounds
/// face neighbour that is not Occupied.
pub fn quality_z_post(map: &VoxelMap, gt: &GroundTruthScene) -> Result<f64, MetricsError> {
    check_alignment(map.config(), gt)?;
    let n = gt.surface_keys().len();
    if n == 0 {
        return Ok(0.0);
    }
    let sum: f64 = map
        .observed()
        .filter(|(k, _)| map.state(*k) == VoxelState::Occupied)
        .filter(|(k, _)| {
            neighbors(*k, Connectivity::Six)
                .any(|nb| map.in_bounds(nb) && map.state(nb) != VoxelState::Occupied)
        })
        .map(|(_, v)| v.weight)
        .sum();
    Ok(sum / n as f64)
}
