//! Quality-guided next-best-view exploration.
//!
//! A simulated range-sensing robot builds a truncated signed distance field
//! (TSDF) of an unknown voxelized scene. Surface frontiers are extracted from
//! the map, one view candidate is generated per frontier at a viewing distance
//! derived from a user quality target, and candidates are scored by an
//! occlusion-aware information gain plus a navigation term.
//!
//! The crate is `no_std` (it needs `alloc`). File formats, reporting and the
//! command line live in the companion `qgnbv` crate.

#![no_std]
#![deny(rust_2018_idioms)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod frontier;
pub mod geometry;
pub mod metrics;
pub mod mission;
pub mod motion;
pub mod path;
pub mod quality;
pub mod raycast;
pub mod scene;
pub mod sensor;
pub mod tsdf;
pub mod view_evaluation;
pub mod view_generation;
pub mod voxelize;

pub use frontier::{Frontier, FrontierSet};
pub use geometry::{Aabb, Vec3};
pub use metrics::MetricsReport;
pub use mission::{MissionConfig, MissionLog, MissionOutcome, MissionResult, PlannerKind};
pub use quality::QualityConfig;
pub use scene::GroundTruthScene;
pub use sensor::{HitKind, HitPoint, SensorModel};
pub use tsdf::{MapConfig, TsdfVoxel, VoxelKey, VoxelMap, VoxelState};
pub use view_evaluation::{RobotState, ScoreBreakdown};
pub use view_generation::{Band, GenerationSchedule, ViewCandidate};
