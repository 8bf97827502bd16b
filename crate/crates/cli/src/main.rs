use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use qgnbv::output::{write_aggregate_csv, write_json};
use qgnbv::runner::{run_cell, CellSummary, OutputOptions};
use qgnbv::spec::{QualityRequest, RunSpec};
use qgnbv::voxgrid::write_voxgrid;
use qgnbv::SceneSource;
use qgnbv_core::quality::DEFAULT_ETA;
use qgnbv_core::sensor::SensorModel;
use qgnbv_core::{GroundTruthScene, PlannerKind};
use rayon::prelude::*;
use serde::Serialize;

const EXIT_FAILURE: u8 = 1;
const EXIT_SCENE: u8 = 2;
const EXIT_PARTIAL: u8 = 3;

#[derive(Parser)]
#[command(name = "qgnbv", version, about = "Quality-guided next-best-view exploration simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one configuration, possibly repeated over consecutive seeds.
    Run(RunArgs),
    /// Run every combination of scenes, planners and distance bands.
    Sweep(SweepArgs),
    /// Write a procedural scene as a voxel grid file.
    GenScene(GenSceneArgs),
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// Simulated mission time limit.
    #[arg(long = "time-limit-s", alias = "time-limit", default_value_t = 900.0)]
    time_limit_s: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    repeat: u32,
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    #[arg(long, default_value_t = 0.5)]
    beta: f64,
    /// Half-width of the quality distance interval for point targets.
    #[arg(long = "eta-m", default_value_t = DEFAULT_ETA)]
    eta_m: f64,
    #[arg(long = "voxel-size-m", default_value_t = 0.25)]
    voxel_size_m: f64,
    #[arg(long = "robot-radius-m", default_value_t = 1.0)]
    robot_radius_m: f64,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Write per-round candidate score tables.
    #[arg(long)]
    score_logs: bool,
    /// Write the final TSDF as a binary dump.
    #[arg(long)]
    dump_tsdf: bool,
    /// Write the final frontier set as CSV.
    #[arg(long)]
    dump_frontiers: bool,
}

#[derive(Args)]
#[group(id = "quality", multiple = false)]
struct QualityArgs {
    /// Per-voxel quality target in (0, 1].
    #[arg(long = "z-star", group = "quality")]
    z_star: Option<f64>,
    /// Optimal distance band `lo:hi` in meters.
    #[arg(long = "d-star-m", alias = "d-star", group = "quality")]
    d_star_m: Option<String>,
    /// Single optimal distance in meters.
    #[arg(long = "d-star-point-m", alias = "d-star-point", group = "quality")]
    d_star_point_m: Option<f64>,
}

#[derive(Args)]
struct RunArgs {
    /// Built-in scene (room, corridor-t, scattered-objects) or a .voxg/.obj/.stl file.
    #[arg(long)]
    scene: String,
    #[arg(long, default_value = "ours", value_parser = parse_planner)]
    planner: PlannerKind,
    #[command(flatten)]
    quality: QualityArgs,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long, value_delimiter = ',', default_value = "room")]
    scenes: Vec<String>,
    #[arg(long, value_delimiter = ',', default_value = "ours,closest-frontier,frontier-count", value_parser = parse_planner)]
    planners: Vec<PlannerKind>,
    /// Distance bands, e.g. `1:2,4:5,8:9`.
    #[arg(long, value_delimiter = ',', default_value = "4:5")]
    bands: Vec<String>,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct GenSceneArgs {
    #[arg(long)]
    kind: String,
    #[arg(long = "voxel-size-m", default_value_t = 0.25)]
    voxel_size_m: f64,
    #[arg(long)]
    out: PathBuf,
}

fn parse_planner(s: &str) -> Result<PlannerKind, String> {
    PlannerKind::from_name(s).ok_or_else(|| format!("unknown planner {s:?}; expected ours, closest-frontier or frontier-count"))
}

fn options(c: &CommonArgs) -> OutputOptions {
    OutputOptions {
        score_logs: c.score_logs,
        dump_tsdf: c.dump_tsdf,
        dump_frontiers: c.dump_frontiers,
    }
}

fn build_spec(scene: &str, planner: PlannerKind, request: QualityRequest, c: &CommonArgs) -> Result<RunSpec> {
    let sensor = SensorModel::default();
    let quality = request.resolve(c.eta_m, &sensor)?;
    if c.repeat == 0 {
        bail!("--repeat must be at least 1");
    }
    Ok(RunSpec {
        scene: scene.to_string(),
        planner,
        request,
        quality,
        alpha: c.alpha,
        beta: c.beta,
        time_limit_s: c.time_limit_s,
        seed: c.seed,
        repeat: c.repeat,
        voxel_size_m: c.voxel_size_m,
        robot_radius_m: c.robot_radius_m,
        v_max: 4.5,
        a_max: 4.8,
        sensor,
    })
}

fn load(source: &SceneSource, voxel_size: f64) -> Result<GroundTruthScene, ExitCode> {
    source.load(voxel_size).map_err(|e| {
        eprintln!("error: cannot load scene {}: {e}", source.label());
        ExitCode::from(EXIT_SCENE)
    })
}

#[derive(Serialize)]
struct RunAggregate<'a> {
    spec: &'a RunSpec,
    cells: [&'a CellSummary; 1],
}

fn cmd_run(args: RunArgs) -> Result<ExitCode> {
    let request = if let Some(z) = args.quality.z_star {
        QualityRequest::ZStar(z)
    } else if let Some(b) = &args.quality.d_star_m {
        QualityRequest::parse_band(b).with_context(|| format!("--d-star-m expects lo:hi, got {b:?}"))?
    } else if let Some(d) = args.quality.d_star_point_m {
        QualityRequest::Point(d)
    } else {
        QualityRequest::Band { lo: 4.0, hi: 5.0 }
    };
    let spec = build_spec(&args.scene, args.planner, request, &args.common)?;
    let source = SceneSource::parse(&args.scene);
    let gt = match load(&source, spec.voxel_size_m) {
        Ok(g) => g,
        Err(code) => return Ok(code),
    };
    let label = source.label();
    let cell = spec.cell_name(&label);
    let cell_dir = args.common.out.join("runs").join(&cell);
    let (summary, _) = run_cell(&gt, &spec, &cell, &label, Some(&cell_dir), &options(&args.common))?;
    write_aggregate_csv(&args.common.out.join("aggregate.csv"), std::slice::from_ref(&summary))?;
    write_json(
        &args.common.out.join("aggregate.json"),
        &RunAggregate {
            spec: &spec,
            cells: [&summary],
        },
    )?;
    println!(
        "{cell}: coverage {:.2}% path {:.1} m map error {:.2}% z_post {:.4} ({} runs)",
        100.0 * summary.coverage_ratio,
        summary.path_length_m,
        summary.mean_map_error_pct,
        summary.z_post,
        summary.runs
    );
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct CellFailure {
    cell: String,
    error: String,
}

#[derive(Serialize)]
struct SweepAggregate {
    specs: Vec<RunSpec>,
    cells: Vec<CellSummary>,
    failures: Vec<CellFailure>,
}

fn cmd_sweep(mut args: SweepArgs) -> Result<ExitCode> {
    args.scenes.retain(|s| !s.trim().is_empty());
    args.bands.retain(|s| !s.trim().is_empty());
    if args.scenes.is_empty() || args.planners.is_empty() || args.bands.is_empty() {
        eprintln!("error: empty sweep matrix");
        return Ok(ExitCode::from(EXIT_FAILURE));
    }
    let mut requests = Vec::new();
    for b in &args.bands {
        requests.push(QualityRequest::parse_band(b).with_context(|| format!("band {b:?} is not lo:hi"))?);
    }
    let mut scenes = Vec::new();
    for s in &args.scenes {
        let source = SceneSource::parse(s);
        match load(&source, args.common.voxel_size_m) {
            Ok(g) => scenes.push((s.clone(), source.label(), g)),
            Err(code) => return Ok(code),
        }
    }
    let mut jobs = Vec::new();
    for (name, label, gt) in &scenes {
        for &planner in &args.planners {
            for &req in &requests {
                jobs.push((name, label, gt, planner, req));
            }
        }
    }
    let opts = options(&args.common);
    let results: Vec<(RunSpec, String, Result<CellSummary>)> = jobs
        .par_iter()
        .map(|(name, label, gt, planner, req)| {
            let spec = match build_spec(name, *planner, *req, &args.common) {
                Ok(s) => s,
                Err(e) => {
                    let cell = format!("{}_{}_{}", label, planner.name(), req.label());
                    let placeholder = build_spec(name, *planner, QualityRequest::Band { lo: 4.0, hi: 5.0 }, &args.common);
                    return (placeholder.expect("default band is valid"), cell, Err(e));
                }
            };
            let cell = spec.cell_name(label);
            let dir = args.common.out.join("runs").join(&cell);
            let r = run_cell(gt, &spec, &cell, label, Some(&dir), &opts).map(|(s, _)| s);
            (spec, cell, r)
        })
        .collect();

    let mut agg = SweepAggregate {
        specs: Vec::new(),
        cells: Vec::new(),
        failures: Vec::new(),
    };
    for (spec, cell, r) in results {
        match r {
            Ok(s) => {
                println!(
                    "{cell}: coverage {:.2}% path {:.1} m map error {:.2}%",
                    100.0 * s.coverage_ratio,
                    s.path_length_m,
                    s.mean_map_error_pct
                );
                agg.specs.push(spec);
                agg.cells.push(s);
            }
            Err(e) => {
                eprintln!("error: cell {cell} failed: {e:#}");
                agg.failures.push(CellFailure {
                    cell,
                    error: format!("{e:#}"),
                });
            }
        }
    }
    fs::create_dir_all(&args.common.out)?;
    write_aggregate_csv(&args.common.out.join("aggregate.csv"), &agg.cells)?;
    write_json(&args.common.out.join("aggregate.json"), &agg)?;
    Ok(if agg.failures.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_PARTIAL)
    })
}

fn cmd_gen_scene(args: GenSceneArgs) -> Result<ExitCode> {
    let SceneSource::Builtin(_) = SceneSource::parse(&args.kind) else {
        eprintln!("error: unknown scene kind {:?}; expected room, corridor-t or scattered-objects", args.kind);
        return Ok(ExitCode::from(EXIT_FAILURE));
    };
    let gt = match load(&SceneSource::parse(&args.kind), args.voxel_size_m) {
        Ok(g) => g,
        Err(code) => return Ok(code),
    };
    if let Some(parent) = args.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    let f = std::io::BufWriter::new(fs::File::create(&args.out)?);
    write_voxgrid(f, gt.grid())?;
    println!(
        "{}: {:?} voxels, {} occupied, {} surface",
        args.out.display(),
        gt.dims(),
        gt.grid().occupied_count(),
        gt.surface_keys().len()
    );
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let r = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::GenScene(a) => cmd_gen_scene(a),
    };
    match r {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_FAILURE)
        }
    }
}
