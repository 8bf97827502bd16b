use qgnbv_core::mission::run_mission;
use qgnbv_core::scene::{generate_scene, SceneKind};
use qgnbv_core::{MissionConfig, MissionOutcome, PlannerKind, QualityConfig, Vec3};

fn band(lo: f64, hi: f64) -> QualityConfig {
    QualityConfig::from_band(lo, hi, 0.42, 10.0).unwrap()
}

#[test]
fn room_mission_ends_by_running_out_of_frontiers() {
    let gt = generate_scene(&SceneKind::room(), 0.25).unwrap();
    let r = run_mission(&gt, &MissionConfig::default(), &band(4.0, 5.0)).unwrap();
    assert_ne!(r.log.outcome, MissionOutcome::TimeLimit);
    assert!(r.frontiers.is_empty());
    assert_eq!(r.log.gt_contacts, 0);
    assert!(r.log.rounds.iter().all(|x| x.unsafe_points == 0));
}

#[test]
fn same_seed_same_log() {
    let gt = generate_scene(&SceneKind::Room { size: Vec3::new(7.0, 6.0, 3.0) }, 0.25).unwrap();
    let cfg = MissionConfig {
        seed: 11,
        time_limit: 60.0,
        ..MissionConfig::default()
    };
    let a = run_mission(&gt, &cfg, &band(2.0, 3.0)).unwrap();
    let b = run_mission(&gt, &cfg, &band(2.0, 3.0)).unwrap();
    assert_eq!(a.log, b.log);
    let c = run_mission(&gt, &MissionConfig { seed: 12, ..cfg }, &band(2.0, 3.0)).unwrap();
    assert_ne!(a.log.start, c.log.start);
}

#[test]
fn every_planner_runs_and_respects_the_time_limit() {
    let gt = generate_scene(&SceneKind::corridor_t(), 0.25).unwrap();
    for planner in PlannerKind::ALL {
        let cfg = MissionConfig {
            planner,
            time_limit: 20.0,
            ..MissionConfig::default()
        };
        let r = run_mission(&gt, &cfg, &band(4.0, 5.0)).unwrap();
        assert!(r.log.sim_time <= 20.0 + 1e-9, "{}", planner.name());
        assert!(r.log.trajectory.windows(2).all(|w| w[1].t >= w[0].t));
        assert!(r.log.rounds.iter().all(|x| x.unsafe_points == 0));
        assert_eq!(r.log.gt_contacts, 0);
    }
}

#[test]
fn each_round_makes_progress() {
    let gt = generate_scene(&SceneKind::scattered_objects(), 0.25).unwrap();
    let cfg = MissionConfig {
        time_limit: 60.0,
        ..MissionConfig::default()
    };
    let r = run_mission(&gt, &cfg, &band(4.0, 5.0)).unwrap();
    for w in r.log.rounds.windows(2) {
        assert!(
            w[1].total_weight > w[0].total_weight || w[1].unreachable > w[0].unreachable,
            "round {} stalled",
            w[1].round
        );
    }
}

#[test]
fn bad_configuration_is_rejected() {
    let gt = generate_scene(&SceneKind::room(), 0.25).unwrap();
    let cfg = MissionConfig {
        v_max: -1.0,
        ..MissionConfig::default()
    };
    assert!(run_mission(&gt, &cfg, &band(4.0, 5.0)).is_err());
    let inside_wall = MissionConfig {
        start: Some(Vec3::new(0.1, 5.0, 1.5)),
        start_jitter: 0.0,
        ..MissionConfig::default()
    };
    assert!(run_mission(&gt, &inside_wall, &band(4.0, 5.0)).is_err());
}
