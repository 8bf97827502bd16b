//! The exploration loop: scan, integrate, extract frontiers, generate and
//! score views, plan, fly, repeat.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::frontier::FrontierSet;
use crate::geometry::{azimuth, Pose, Vec3};
use crate::motion::Trapezoid;
use crate::path::{plan_path, Path};
use crate::quality::QualityConfig;
use crate::scene::GroundTruthScene;
use crate::sensor::{scan, SensorError, SensorModel};
use crate::tsdf::{keys_within, MapError, VoxelKey, VoxelMap, VoxelQuery, VoxelState};
use crate::view_evaluation::{combine_scores, info_gain, select_best, select_by, RobotState, ScoreBreakdown};
use crate::view_generation::{generate_views, GenerationSchedule, ViewCache, ViewCandidate};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum PlannerKind {
    #[serde(rename = "ours")]
    QualityGuided,
    #[serde(rename = "closest-frontier")]
    ClosestFrontier,
    #[serde(rename = "frontier-count")]
    FrontierCount,
}

impl PlannerKind {
    pub const ALL: [PlannerKind; 3] = [
        PlannerKind::QualityGuided,
        PlannerKind::ClosestFrontier,
        PlannerKind::FrontierCount,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PlannerKind::QualityGuided => "ours",
            PlannerKind::ClosestFrontier => "closest-frontier",
            PlannerKind::FrontierCount => "frontier-count",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        PlannerKind::ALL.into_iter().find(|p| p.name() == s)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MissionConfig {
    pub planner: PlannerKind,
    /// Simulated mission time budget (s).
    pub time_limit: f64,
    pub v_max: f64,
    pub a_max: f64,
    pub robot_radius: f64,
    /// Radius around executed positions treated as physically cleared.
    pub sweep_radius: f64,
    /// Simulated time between scans while flying (s).
    pub scan_interval: f64,
    /// Simulated time of the stationary scan at each round (s).
    pub scan_duration: f64,
    /// Distance before the goal at which the next round is planned (m).
    pub replan_distance: f64,
    pub alpha: f64,
    pub beta: f64,
    pub seed: u64,
    pub sensor: SensorModel,
    /// Start position; the scene's default when absent.
    pub start: Option<Vec3>,
    /// Horizontal start perturbation drawn from the seed (m).
    pub start_jitter: f64,
    /// Arrivals at a frontier's view after which a persisting frontier is
    /// treated as unscannable.
    pub max_visits: u32,
    pub record_scores: bool,
}

impl Default for MissionConfig {
    fn default() -> Self {
        MissionConfig {
            planner: PlannerKind::QualityGuided,
            time_limit: 900.0,
            v_max: 4.5,
            a_max: 4.8,
            robot_radius: 1.0,
            sweep_radius: 2.0,
            scan_interval: 1.0,
            scan_duration: 0.1,
            replan_distance: 1.5,
            alpha: 0.5,
            beta: 0.5,
            seed: 0,
            sensor: SensorModel::default(),
            start: None,
            start_jitter: 0.5,
            max_visits: 2,
            record_scores: false,
        }
    }
}

impl MissionConfig {
    pub fn validate(&self) -> Result<(), MissionError> {
        if !(self.time_limit > 0.0) {
            return Err(MissionError::Config("time limit must be positive"));
        }
        if !(self.v_max > 0.0 && self.a_max > 0.0) {
            return Err(MissionError::Config("velocity and acceleration limits must be positive"));
        }
        if !((0.0..=1.0).contains(&self.alpha) && (0.0..=1.0).contains(&self.beta)) {
            return Err(MissionError::Config("score weights must lie in [0, 1]"));
        }
        if !(self.robot_radius > 0.0 && self.scan_interval > 0.0 && self.scan_duration >= 0.0) {
            return Err(MissionError::Config("radius and scan timing must be positive"));
        }
        self.sensor.validate()?;
        Ok(())
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MissionError {
    #[error("invalid mission configuration: {0}")]
    Config(&'static str),
    #[error("no collision-free start position in the scene")]
    NoStart,
    #[error("start position ({0}, {1}, {2}) is within the robot radius of an obstacle")]
    StartBlocked(f64, f64, f64),
    #[error(transparent)]
    Sensor(#[from] SensorError),
    #[error(transparent)]
    Map(#[from] MapError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum MissionOutcome {
    /// No frontier left at all.
    Complete,
    /// Only unscannable frontiers left.
    Exhausted,
    TimeLimit,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub t: f64,
    pub position: Vec3,
    pub yaw: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoredCandidate {
    pub candidate: ViewCandidate,
    pub score: ScoreBreakdown,
    pub selected: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round: usize,
    /// Simulated time when planning happened.
    pub time: f64,
    pub state: RobotState,
    pub selected: Option<ViewCandidate>,
    pub score: Option<ScoreBreakdown>,
    pub frontiers: usize,
    pub unreachable: usize,
    pub candidates: usize,
    pub no_path: usize,
    pub total_weight: f64,
    pub observed_voxels: usize,
    pub leg_length: f64,
    /// Executed positions within the robot radius of a voxel that was
    /// Occupied in the map used for planning.
    pub unsafe_points: usize,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub scores: Vec<ScoredCandidate>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MissionLog {
    pub config: MissionConfig,
    pub quality: QualityConfig,
    pub start: Vec3,
    pub outcome: MissionOutcome,
    pub rounds: Vec<RoundRecord>,
    pub trajectory: Vec<TrajectoryPoint>,
    pub path_length: f64,
    pub sim_time: f64,
    pub travel_time: f64,
    pub scan_time: f64,
    pub scans: usize,
    /// Executed positions within the robot radius of a ground-truth obstacle.
    pub gt_contacts: usize,
}

#[derive(Clone, Debug)]
pub struct MissionResult {
    pub log: MissionLog,
    pub map: VoxelMap,
    pub frontiers: FrontierSet,
}

fn unit(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64
}

fn resolve_start(gt: &GroundTruthScene, cfg: &MissionConfig, rng: &mut ChaCha8Rng) -> Result<Vec3, MissionError> {
    let base = match cfg.start {
        Some(s) => s,
        None => gt.default_start(cfg.robot_radius).ok_or(MissionError::NoStart)?,
    };
    if !gt.clearance_ok(&base, cfg.robot_radius) {
        return Err(MissionError::StartBlocked(base.x, base.y, base.z));
    }
    if cfg.start_jitter > 0.0 {
        for _ in 0..32 {
            let dx = (2.0 * unit(rng) - 1.0) * cfg.start_jitter;
            let dy = (2.0 * unit(rng) - 1.0) * cfg.start_jitter;
            let p = base + Vec3::new(dx, dy, 0.0);
            if gt.clearance_ok(&p, cfg.robot_radius) {
                return Ok(p);
            }
        }
    }
    Ok(base)
}

fn near_occupied<M: VoxelQuery>(map: &M, p: &Vec3, radius: f64) -> bool {
    keys_within(map.map_config(), p, radius).any(|k| map.state(k) == VoxelState::Occupied)
}

struct Runner<'a, R> {
    gt: &'a GroundTruthScene,
    cfg: &'a MissionConfig,
    map: VoxelMap,
    rng: R,
    t: f64,
    scans: usize,
    scan_time: f64,
    trajectory: Vec<TrajectoryPoint>,
}

impl<R: RngCore> Runner<'_, R> {
    fn sense(&mut self, position: Vec3, yaw: f64) -> Result<(), MissionError> {
        let s = scan(self.gt, &Pose::new(position, yaw), &self.cfg.sensor, &mut self.rng)?;
        self.map.integrate_scan(&position, &s.points)?;
        self.scans += 1;
        Ok(())
    }
}

/// Run one exploration mission in `gt`.
pub fn run_mission(
    gt: &GroundTruthScene,
    cfg: &MissionConfig,
    q: &QualityConfig,
) -> Result<MissionResult, MissionError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let start = resolve_start(gt, cfg, &mut rng)?;
    let map = VoxelMap::new(gt.map_config(cfg.sensor.r_min, cfg.sensor.r_max))?;
    let mut run = Runner {
        gt,
        cfg,
        map,
        rng,
        t: 0.0,
        scans: 0,
        scan_time: 0.0,
        trajectory: Vec::new(),
    };
    run.map.mark_swept(&start, cfg.sweep_radius);
    run.trajectory.push(TrajectoryPoint {
        t: 0.0,
        position: start,
        yaw: 0.0,
    });

    let radius = cfg.robot_radius;
    let vs = gt.voxel_size();
    let profile = Trapezoid::new(cfg.v_max, cfg.a_max);
    let schedule = GenerationSchedule::new(q, &cfg.sensor, radius);
    let mut state = RobotState::at_rest(start);
    let mut frontiers = FrontierSet::new();
    let mut cache = ViewCache::new();
    let mut visits: BTreeMap<VoxelKey, u32> = BTreeMap::new();
    let mut rounds: Vec<RoundRecord> = Vec::new();
    let mut path_length = 0.0;
    let mut travel_time = 0.0;
    let mut gt_contacts = 0;

    let outcome = loop {
        run.sense(state.position, state.yaw)?;
        run.t += cfg.scan_duration;
        run.scan_time += cfg.scan_duration;
        frontiers.update(&mut run.map);
        for (k, &n) in &visits {
            if n >= cfg.max_visits && frontiers.contains(k) {
                frontiers.mark_unreachable(*k);
            }
        }

        let mut record = RoundRecord {
            round: rounds.len(),
            time: run.t,
            state,
            selected: None,
            score: None,
            frontiers: frontiers.len(),
            unreachable: frontiers.remaining().len(),
            candidates: 0,
            no_path: 0,
            total_weight: run.map.total_weight(),
            observed_voxels: run.map.observed().count(),
            leg_length: 0.0,
            unsafe_points: 0,
            scores: Vec::new(),
        };
        let finished = |f: &FrontierSet| {
            if f.remaining().is_empty() {
                MissionOutcome::Complete
            } else {
                MissionOutcome::Exhausted
            }
        };
        if run.t >= cfg.time_limit {
            rounds.push(record);
            break MissionOutcome::TimeLimit;
        }
        if frontiers.is_empty() {
            rounds.push(record);
            break finished(&frontiers);
        }

        let snap = run.map.snapshot();
        let mut candidates = generate_views(&snap, &mut frontiers, &schedule, &mut cache);
        record.candidates = candidates.len();
        let mut raw: Vec<(f64, usize)> = match cfg.planner {
            PlannerKind::ClosestFrontier => candidates.iter().map(|_| (0.0, 0)).collect(),
            _ => candidates
                .iter()
                .map(|c| info_gain(&snap, &c.position, &frontiers, q))
                .collect(),
        };

        let mut chosen: Option<(ViewCandidate, ScoreBreakdown, Path)> = None;
        while !candidates.is_empty() {
            let scores = combine_scores(vs, &candidates, &raw, &state, cfg.alpha, cfg.beta);
            let from = state.position;
            let pick = match cfg.planner {
                PlannerKind::QualityGuided => select_best(&candidates, &scores, &from),
                PlannerKind::ClosestFrontier => {
                    select_by(&candidates, &from, |i| -(candidates[i].position - from).norm())
                }
                PlannerKind::FrontierCount => select_by(&candidates, &from, |i| scores[i].visible as f64),
            };
            let Some(i) = pick else { break };
            match plan_path(&snap, &from, &candidates[i].position, radius) {
                Ok(path) => {
                    if cfg.record_scores {
                        record.scores = candidates
                            .iter()
                            .zip(&scores)
                            .enumerate()
                            .map(|(j, (c, s))| ScoredCandidate {
                                candidate: *c,
                                score: *s,
                                selected: i == j,
                            })
                            .collect();
                    }
                    chosen = Some((candidates[i], scores[i], path));
                    break;
                }
                Err(_) => {
                    let key = candidates[i].frontier_key;
                    frontiers.mark_unreachable(key);
                    cache.invalidate(&key);
                    candidates.remove(i);
                    raw.remove(i);
                    record.no_path += 1;
                }
            }
        }
        let Some((target, score, path)) = chosen else {
            record.frontiers = frontiers.len();
            record.unreachable = frontiers.remaining().len();
            rounds.push(record);
            break finished(&frontiers);
        };
        record.selected = Some(target);
        record.score = Some(score);

        // Fly the leg, sensing at a fixed cadence.
        let length = path.length();
        let duration = profile.duration(length);
        let budget = cfg.time_limit - run.t;
        let flown_time = duration.min(budget);
        let flown = profile.distance_at(length, flown_time);
        let mut unsafe_points = 0;
        let mut s = 0.0;
        loop {
            let (p, _) = path.sample(s);
            run.map.mark_swept(&p, cfg.sweep_radius);
            if near_occupied(&snap, &p, radius) {
                unsafe_points += 1;
            }
            if !gt.clearance_ok(&p, radius) {
                gt_contacts += 1;
            }
            if s >= flown {
                break;
            }
            s = (s + vs).min(flown);
        }
        let mut k = 1;
        while (k as f64) * cfg.scan_interval < flown_time {
            let tk = k as f64 * cfg.scan_interval;
            let (p, tangent) = path.sample(profile.distance_at(length, tk));
            let yaw = azimuth(&tangent);
            run.sense(p, yaw)?;
            run.trajectory.push(TrajectoryPoint {
                t: run.t + tk,
                position: p,
                yaw,
            });
            k += 1;
        }
        run.t += flown_time;
        travel_time += flown_time;
        path_length += flown;
        record.leg_length = flown;
        record.unsafe_points = unsafe_points;
        rounds.push(record);

        let (end, end_tangent) = path.sample(flown);
        if flown_time < duration {
            state = RobotState {
                position: end,
                velocity: end_tangent * profile.speed_at(length, flown_time),
                yaw: azimuth(&end_tangent),
            };
            run.trajectory.push(TrajectoryPoint {
                t: run.t,
                position: end,
                yaw: state.yaw,
            });
            break MissionOutcome::TimeLimit;
        }
        // Heading carried into the next round: the motion at the point where
        // the next plan is triggered.
        let s_replan = (length - cfg.replan_distance).max(0.0);
        let (_, tangent) = path.sample(s_replan);
        state = RobotState {
            position: target.position,
            velocity: tangent * profile.speed_at_distance(length, s_replan),
            yaw: target.yaw,
        };
        run.trajectory.push(TrajectoryPoint {
            t: run.t,
            position: target.position,
            yaw: target.yaw,
        });
        *visits.entry(target.frontier_key).or_insert(0) += 1;
    };

    let log = MissionLog {
        config: cfg.clone(),
        quality: *q,
        start,
        outcome,
        rounds,
        trajectory: run.trajectory,
        path_length,
        sim_time: run.t,
        travel_time,
        scan_time: run.scan_time,
        scans: run.scans,
        gt_contacts,
    };
    Ok(MissionResult {
        log,
        map: run.map,
        frontiers,
    })
}
