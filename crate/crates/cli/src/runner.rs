//! Running missions for a spec and aggregating their metrics.

use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use qgnbv_core::metrics::{ProbeShortfall, PROBE_DISTANCES};
use qgnbv_core::mission::run_mission;
use qgnbv_core::{GroundTruthScene, MetricsReport, MissionOutcome, MissionResult};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::output;
use crate::spec::RunSpec;

#[derive(Clone, Debug, Default)]
pub struct OutputOptions {
    pub score_logs: bool,
    pub dump_tsdf: bool,
    pub dump_frontiers: bool,
}

pub struct RunRecord {
    pub seed: u64,
    pub result: MissionResult,
    pub metrics: MetricsReport,
}

/// Mean metrics over the repetitions of one configuration. Wall time is left
/// out so that the summary is reproducible.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub cell: String,
    pub scene: String,
    pub planner: String,
    pub d_star_m: f64,
    pub eta_m: f64,
    pub z_star: f64,
    pub runs: usize,
    pub seeds: Vec<u64>,
    pub outcomes: Vec<MissionOutcome>,
    pub covered_count: f64,
    pub coverage_ratio: f64,
    pub path_length_m: f64,
    pub mean_map_error_pct: f64,
    pub z_post: f64,
    pub distance_to_z_star: Vec<ProbeShortfall>,
    pub sim_time_s: f64,
    pub unsafe_points: usize,
}

fn mean<I: Iterator<Item = f64>>(it: I) -> f64 {
    let (s, n) = it.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        0.0
    } else {
        s / n as f64
    }
}

impl CellSummary {
    pub fn new(cell: &str, scene: &str, spec: &RunSpec, runs: &[RunRecord]) -> Self {
        let m = |f: &dyn Fn(&RunRecord) -> f64| mean(runs.iter().map(f));
        CellSummary {
            cell: cell.to_string(),
            scene: scene.to_string(),
            planner: spec.planner.name().to_string(),
            d_star_m: spec.quality.d_star,
            eta_m: spec.quality.eta,
            z_star: spec.quality.z_star,
            runs: runs.len(),
            seeds: runs.iter().map(|r| r.seed).collect(),
            outcomes: runs.iter().map(|r| r.result.log.outcome).collect(),
            covered_count: m(&|r| r.metrics.covered_count as f64),
            coverage_ratio: m(&|r| r.metrics.coverage_ratio),
            path_length_m: m(&|r| r.metrics.path_length_m),
            mean_map_error_pct: m(&|r| r.metrics.mean_map_error_pct),
            z_post: m(&|r| r.metrics.z_post),
            distance_to_z_star: PROBE_DISTANCES
                .iter()
                .map(|&p| ProbeShortfall {
                    probe_m: p,
                    shortfall_pct: m(&|r| r.metrics.shortfall_at(p).unwrap_or(0.0)),
                })
                .collect(),
            sim_time_s: m(&|r| r.result.log.sim_time),
            unsafe_points: runs
                .iter()
                .flat_map(|r| r.result.log.rounds.iter())
                .map(|x| x.unsafe_points)
                .sum(),
        }
    }

    pub fn shortfall_at(&self, probe: f64) -> Option<f64> {
        self.distance_to_z_star
            .iter()
            .find(|p| (p.probe_m - probe).abs() < 1e-9)
            .map(|p| p.shortfall_pct)
    }
}

/// One mission plus its metrics.
pub fn run_one(gt: &GroundTruthScene, spec: &RunSpec, seed: u64, opts: &OutputOptions) -> Result<RunRecord> {
    let t0 = Instant::now();
    let cfg = spec.mission(seed, opts.score_logs);
    let result = run_mission(gt, &cfg, &spec.quality).with_context(|| format!("mission with seed {seed}"))?;
    let mut metrics = MetricsReport::compute(&result.map, gt, result.log.path_length)?;
    metrics.wall_time_s = t0.elapsed().as_secs_f64();
    Ok(RunRecord {
        seed,
        result,
        metrics,
    })
}

/// Run every repetition of `spec` (in parallel), write per-run outputs under
/// `cell_dir` when given, and return the summary.
pub fn run_cell(
    gt: &GroundTruthScene,
    spec: &RunSpec,
    cell: &str,
    scene_label: &str,
    cell_dir: Option<&Path>,
    opts: &OutputOptions,
) -> Result<(CellSummary, Vec<RunRecord>)> {
    let seeds: Vec<u64> = spec.seeds().collect();
    let runs: Vec<RunRecord> = seeds
        .par_iter()
        .map(|&s| run_one(gt, spec, s, opts))
        .collect::<Result<_>>()?;
    if let Some(dir) = cell_dir {
        for r in &runs {
            let run_dir: PathBuf = if runs.len() == 1 {
                dir.to_path_buf()
            } else {
                dir.join(format!("seed-{}", r.seed))
            };
            output::write_run(&run_dir, spec, r, opts)?;
        }
    }
    Ok((CellSummary::new(cell, scene_label, spec, &runs), runs))
}
