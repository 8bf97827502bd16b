//! CSV and JSON writers for mission results.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::Path;

use anyhow::{Context, Result};
use qgnbv_core::frontier::FrontierSet;
use qgnbv_core::metrics::PROBE_DISTANCES;
use qgnbv_core::mission::{MissionLog, RoundRecord};
use qgnbv_core::{MetricsReport, VoxelMap};
use serde::Serialize;

use crate::runner::{CellSummary, OutputOptions, RunRecord};
use crate::spec::RunSpec;
use crate::tsdf_dump::write_tsdf;

pub fn write_trajectory(path: &Path, log: &MissionLog) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["t", "x", "y", "z", "yaw"])?;
    for p in &log.trajectory {
        w.serialize((p.t, p.position.x, p.position.y, p.position.z, p.yaw))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_scores(path: &Path, round: &RoundRecord) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "x", "y", "z", "yaw", "band", "frontier_ix", "frontier_iy", "frontier_iz", "j_raw", "visible", "j_info",
        "j_nav", "total", "selected",
    ])?;
    for s in &round.scores {
        let c = &s.candidate;
        w.serialize((
            c.position.x,
            c.position.y,
            c.position.z,
            c.yaw,
            c.band.name(),
            c.frontier_key.x,
            c.frontier_key.y,
            c.frontier_key.z,
            s.score.j_raw,
            s.score.visible,
            s.score.j_info,
            s.score.j_nav,
            s.score.total,
            s.selected as u8,
        ))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_frontiers(path: &Path, frontiers: &FrontierSet, map: &VoxelMap) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["ix", "iy", "iz", "nx", "ny", "nz", "reachable"])?;
    for f in frontiers.all_with_normals(map) {
        let n = f.normal.unwrap_or_default();
        w.serialize((f.key.x, f.key.y, f.key.z, n.x, n.y, n.z, f.reachable as u8))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let f = BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
    serde_json::to_writer_pretty(f, value)?;
    Ok(())
}

#[derive(Serialize)]
struct MissionJson<'a> {
    spec: &'a RunSpec,
    seed: u64,
    metrics: &'a MetricsReport,
    log: &'a MissionLog,
}

/// Per-run directory: trajectory, mission summary and the optional extras.
pub fn write_run(dir: &Path, spec: &RunSpec, run: &RunRecord, opts: &OutputOptions) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let log = &run.result.log;
    write_trajectory(&dir.join("trajectory.csv"), log)?;
    if opts.score_logs {
        for r in log.rounds.iter().filter(|r| !r.scores.is_empty()) {
            write_scores(&dir.join(format!("scores_round_{:04}.csv", r.round)), r)?;
        }
    }
    // Scores already went to CSV; keep the JSON compact.
    let mut slim = log.clone();
    for r in &mut slim.rounds {
        r.scores.clear();
    }
    write_json(
        &dir.join("mission.json"),
        &MissionJson {
            spec,
            seed: run.seed,
            metrics: &run.metrics,
            log: &slim,
        },
    )?;
    if opts.dump_tsdf {
        let f = BufWriter::new(File::create(dir.join("tsdf.bin"))?);
        write_tsdf(f, &run.result.map)?;
    }
    if opts.dump_frontiers {
        write_frontiers(&dir.join("frontiers.csv"), &run.result.frontiers, &run.result.map)?;
    }
    Ok(())
}

pub fn write_aggregate_csv(path: &Path, cells: &[CellSummary]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header: Vec<String> = [
        "cell",
        "scene",
        "planner",
        "d_star_m",
        "eta_m",
        "z_star",
        "runs",
        "covered_count",
        "coverage_pct",
        "path_length_m",
        "map_error_pct",
        "z_post",
        "sim_time_s",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    header.extend(PROBE_DISTANCES.iter().map(|p| format!("dist_to_z_star_{p}m_pct")));
    w.write_record(&header)?;
    for c in cells {
        let mut row = vec![
            c.cell.clone(),
            c.scene.clone(),
            c.planner.clone(),
            c.d_star_m.to_string(),
            c.eta_m.to_string(),
            c.z_star.to_string(),
            c.runs.to_string(),
            c.covered_count.to_string(),
            (100.0 * c.coverage_ratio).to_string(),
            c.path_length_m.to_string(),
            c.mean_map_error_pct.to_string(),
            c.z_post.to_string(),
            c.sim_time_s.to_string(),
        ];
        row.extend(c.distance_to_z_star.iter().map(|p| p.shortfall_pct.to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}
