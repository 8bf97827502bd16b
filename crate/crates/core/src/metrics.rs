//! Reconstruction metrics against ground truth.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::quality::quality_z_post;
use crate::scene::GroundTruthScene;
use crate::tsdf::{MapConfig, VoxelMap};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("map and ground truth grids are not aligned: {0}")]
    GridMismatch(&'static str),
}

/// The map and ground truth must share voxel size and origin so that keys
/// coincide.
pub fn check_alignment(config: &MapConfig, gt: &GroundTruthScene) -> Result<(), MetricsError> {
    let tol = 1e-9 * config.voxel_size.max(1.0);
    if (config.voxel_size - gt.voxel_size()).abs() > tol {
        return Err(MetricsError::GridMismatch("voxel size differs"));
    }
    if (config.origin - gt.origin()).amax() > tol {
        return Err(MetricsError::GridMismatch("origin differs"));
    }
    Ok(())
}

/// Ground-truth surface voxels whose reconstructed distance is within one
/// voxel diagonal of the true distance. Returns `(count, ratio)`.
pub fn coverage(map: &VoxelMap, gt: &GroundTruthScene) -> Result<(usize, f64), MetricsError> {
    check_alignment(map.config(), gt)?;
    let surface = gt.surface_keys();
    if surface.is_empty() {
        return Ok((0, 0.0));
    }
    let tau = map.config().truncation;
    let diag = map.config().voxel_size * libm::sqrt(3.0);
    let count = surface
        .iter()
        .filter(|&&k| {
            let v = map.voxel(k);
            v.weight > 0.0 && (v.distance - gt.distance_to_occupied(k, tau)).abs() < diag
        })
        .count();
    Ok((count, count as f64 / surface.len() as f64))
}

/// Mean absolute distance error over ground-truth surface voxels as a
/// percentage of the truncation distance; unobserved voxels count as `tau`.
pub fn map_error(map: &VoxelMap, gt: &GroundTruthScene) -> Result<f64, MetricsError> {
    check_alignment(map.config(), gt)?;
    let surface = gt.surface_keys();
    if surface.is_empty() {
        return Ok(0.0);
    }
    let tau = map.config().truncation;
    let total: f64 = surface
        .iter()
        .map(|&k| {
            let v = map.voxel(k);
            if v.weight > 0.0 {
                (v.distance - gt.distance_to_occupied(k, tau)).abs()
            } else {
                tau
            }
        })
        .sum();
    Ok(100.0 * total / (surface.len() as f64 * tau))
}

/// Shortfall against the confidence reached by one observation at `probe`
/// meters: the mean of `max(0, 1/probe^2 - w)` over observed ground-truth
/// surface voxels, in percent.
pub fn distance_to_target(map: &VoxelMap, gt: &GroundTruthScene, probe: f64) -> Result<f64, MetricsError> {
    check_alignment(map.config(), gt)?;
    let target = 1.0 / (probe * probe);
    let mut n = 0usize;
    let mut deficit = 0.0;
    for &k in gt.surface_keys() {
        let w = map.voxel(k).weight;
        if w > 0.0 {
            n += 1;
            deficit += (target - w).max(0.0);
        }
    }
    if n == 0 {
        return Ok(0.0);
    }
    Ok(100.0 * deficit / n as f64)
}

/// Probe distances reported in the per-distance shortfall table.
pub const PROBE_DISTANCES: [f64; 6] = [1.0, 2.0, 4.0, 5.0, 8.0, 9.0];

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeShortfall {
    pub probe_m: f64,
    pub shortfall_pct: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub covered_count: usize,
    pub coverage_ratio: f64,
    pub path_length_m: f64,
    pub mean_map_error_pct: f64,
    pub z_post: f64,
    pub distance_to_z_star: Vec<ProbeShortfall>,
    pub wall_time_s: f64,
}

impl MetricsReport {
    pub fn compute(map: &VoxelMap, gt: &GroundTruthScene, path_length_m: f64) -> Result<Self, MetricsError> {
        let (covered_count, coverage_ratio) = coverage(map, gt)?;
        let distance_to_z_star = PROBE_DISTANCES
            .iter()
            .map(|&p| {
                Ok(ProbeShortfall {
                    probe_m: p,
                    shortfall_pct: distance_to_target(map, gt, p)?,
                })
            })
            .collect::<Result<Vec<_>, MetricsError>>()?;
        Ok(MetricsReport {
            covered_count,
            coverage_ratio,
            path_length_m,
            mean_map_error_pct: map_error(map, gt)?,
            z_post: quality_z_post(map, gt)?,
            distance_to_z_star,
            wall_time_s: 0.0,
        })
    }

    pub fn shortfall_at(&self, probe: f64) -> Option<f64> {
        self.distance_to_z_star
            .iter()
            .find(|p| (p.probe_m - probe).abs() < 1e-9)
            .map(|p| p.shortfall_pct)
    }
}
