//! Fully resolved run parameters, echoed into every output.

use qgnbv_core::quality::{QualityConfig, QualityError};
use qgnbv_core::sensor::SensorModel;
use qgnbv_core::{MissionConfig, PlannerKind};
use serde::{Deserialize, Serialize};

/// How the user stated the quality requirement.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QualityRequest {
    ZStar(f64),
    Band { lo: f64, hi: f64 },
    Point(f64),
}

impl QualityRequest {
    pub fn resolve(&self, eta: f64, sensor: &SensorModel) -> Result<QualityConfig, QualityError> {
        match *self {
            QualityRequest::ZStar(z) => QualityConfig::from_target(z, eta, sensor.r_min, sensor.r_max),
            QualityRequest::Band { lo, hi } => QualityConfig::from_band(lo, hi, sensor.r_min, sensor.r_max),
            QualityRequest::Point(d) => QualityConfig::from_distance(d, eta, sensor.r_min, sensor.r_max),
        }
    }

    /// Parses `a:b`.
    pub fn parse_band(s: &str) -> Option<Self> {
        let (a, b) = s.split_once(':')?;
        Some(QualityRequest::Band {
            lo: a.trim().parse().ok()?,
            hi: b.trim().parse().ok()?,
        })
    }

    pub fn label(&self) -> String {
        match *self {
            QualityRequest::ZStar(z) => format!("z{z}"),
            QualityRequest::Band { lo, hi } => format!("d{lo}-{hi}"),
            QualityRequest::Point(d) => format!("d{d}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSpec {
    pub scene: String,
    pub planner: PlannerKind,
    pub request: QualityRequest,
    pub quality: QualityConfig,
    pub alpha: f64,
    pub beta: f64,
    pub time_limit_s: f64,
    pub seed: u64,
    pub repeat: u32,
    pub voxel_size_m: f64,
    pub robot_radius_m: f64,
    pub v_max: f64,
    pub a_max: f64,
    pub sensor: SensorModel,
}

impl RunSpec {
    /// Mission configuration for one repetition.
    pub fn mission(&self, seed: u64, record_scores: bool) -> MissionConfig {
        MissionConfig {
            planner: self.planner,
            time_limit: self.time_limit_s,
            v_max: self.v_max,
            a_max: self.a_max,
            robot_radius: self.robot_radius_m,
            sweep_radius: 2.0 * self.robot_radius_m,
            alpha: self.alpha,
            beta: self.beta,
            seed,
            sensor: self.sensor.clone(),
            record_scores,
            ..MissionConfig::default()
        }
    }

    pub fn seeds(&self) -> impl Iterator<Item = u64> + '_ {
        (0..self.repeat as u64).map(move |i| self.seed + i)
    }

    pub fn cell_name(&self, scene_label: &str) -> String {
        format!("{}_{}_{}", scene_label, self.planner.name(), self.request.label())
    }
}
