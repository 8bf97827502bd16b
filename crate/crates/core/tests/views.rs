mod common;

use std::f64::consts::PI;

use common::{box_map, empty, keys, occupied, VS};
use nalgebra::{Rotation3, Unit};
use proptest::prelude::*;
use qgnbv_core::geometry::{deg, elevation};
use qgnbv_core::view_evaluation::{
    combine_scores, heading_factor, info_gain, nav_score, select_best, visibility,
};
use qgnbv_core::view_generation::{generate_view, rotation_fallback};
use qgnbv_core::{
    Band, Frontier, FrontierSet, GenerationSchedule, QualityConfig, RobotState, ScoreBreakdown, SensorModel, Vec3,
    ViewCandidate, VoxelKey, VoxelMap,
};

fn band_4_5() -> QualityConfig {
    QualityConfig::from_band(4.0, 5.0, 0.42, 10.0).unwrap()
}

fn schedule() -> GenerationSchedule {
    GenerationSchedule::new(&band_4_5(), &SensorModel::default(), 1.0)
}

fn filled(dims: [usize; 3], solid: impl Fn(VoxelKey) -> bool) -> VoxelMap {
    let mut map = box_map(dims);
    for k in keys(dims) {
        map.set_voxel(k, if solid(k) { occupied(1.0) } else { empty(1.0) });
    }
    map
}

#[test]
fn open_wall_frontier_gets_optimal_view_along_normal() {
    // Wall at x = 0, open observed space in front of it.
    let map = filled([48, 24, 24], |k| k.x == 0);
    let f = Frontier {
        key: VoxelKey::new(1, 12, 12),
        normal: Some(Vec3::x()),
        reachable: true,
    };
    let c = generate_view(&map, &f, &schedule()).unwrap();
    let target = map.config().center(f.key);
    assert_eq!(c.band, Band::Optimal);
    assert!((c.position - (target + Vec3::x() * 4.5)).norm() < 1e-12);
    assert!((c.view_dir + Vec3::x()).norm() < 1e-12);
}

#[test]
fn corridor_frontier_falls_back_to_close_band() {
    // Corridor 3 m wide and 3 m high along x; walls at y = 0 and y = 13.
    let map = filled([48, 14, 14], |k| k.y == 0 || k.y == 13 || k.z == 0 || k.z == 13);
    let f = Frontier {
        key: VoxelKey::new(24, 1, 6),
        normal: Some(Vec3::y()),
        reachable: true,
    };
    let s = schedule();
    let c = generate_view(&map, &f, &s).unwrap();
    let target = map.config().center(f.key);
    assert_eq!(c.band, Band::Close);
    assert!(((c.position - target).norm() - s.close).abs() < 1e-9);
    // Straight across would put the body into the opposite wall.
    let straight = target + Vec3::y() * s.close;
    assert!(!qgnbv_core::tsdf::clearance_ok(&map, &straight, 1.0));
}

#[test]
fn fully_blocked_frontier_has_no_view() {
    let map = filled([16, 16, 16], |k| k.x != 8);
    let f = Frontier {
        key: VoxelKey::new(8, 8, 8),
        normal: Some(Vec3::x()),
        reachable: true,
    };
    assert!(generate_view(&map, &f, &schedule()).is_none());
    let undefined = Frontier { normal: None, ..f };
    assert!(generate_view(&map, &undefined, &schedule()).is_none());
}

#[test]
fn first_rotations_are_plus_and_minus_one_step() {
    let n = Vec3::new(0.6, -0.3, 0.2).normalize();
    let step = deg(30.0);
    let lim = deg(30.0);
    let axis = Unit::new_normalize(Vec3::z());
    for (attempt, angle) in [(1, step), (2, -step)] {
        let expected = Rotation3::from_axis_angle(&axis, angle) * n;
        let got = rotation_fallback(&n, attempt, step, lim);
        assert!((got - expected).norm() < 1e-12, "attempt {attempt}");
        let frontier = Vec3::new(1.0, 2.0, 3.0);
        let d0 = (frontier + n * 4.5 - frontier).norm();
        let d1 = (frontier + got * 4.5 - frontier).norm();
        assert!((d0 - d1).abs() < 1e-12);
    }
}

/// An Unknown voxel boxed in by Occupied voxels except on the face shared
/// with `frontier`, so that exactly `frontier` becomes a surface frontier.
fn plant_frontier(map: &mut VoxelMap, frontier: VoxelKey, behind: [i32; 3]) {
    let u = frontier.offset(behind);
    for d in [[1, 0, 0], [-1, 0, 0], [0, 1, 0], [0, -1, 0], [0, 0, 1], [0, 0, -1]] {
        let nb = u.offset(d);
        if nb != frontier {
            map.set_voxel(nb, occupied(1.0));
        }
    }
    map.set_voxel(u, Default::default());
}

#[test]
fn info_gain_three_frontier_case() {
    let dims = [64, 40, 9];
    let mut map = box_map(dims);
    for k in keys(dims) {
        map.set_voxel(k, empty(1.0));
    }
    let a = VoxelKey::new(26, 8, 4);
    let b = VoxelKey::new(8, 38, 4);
    let c = VoxelKey::new(30, 20, 4);
    plant_frontier(&mut map, a, [1, 0, 0]);
    plant_frontier(&mut map, b, [0, 1, 0]);
    plant_frontier(&mut map, c, [1, 0, 0]);
    map.set_voxel(VoxelKey::new(19, 14, 4), occupied(1.0));

    let frontiers = FrontierSet::extract(&map);
    assert_eq!(frontiers.keys().collect::<Vec<_>>(), {
        let mut v = vec![a, b, c];
        v.sort();
        v
    });
    let q = band_4_5();
    let pos = map.config().center(VoxelKey::new(8, 8, 4));
    assert!(((map.config().center(a) - pos).norm() - q.d_star).abs() < 1e-12);
    assert!(((map.config().center(b) - pos).norm() - (q.d_star + 3.0)).abs() < 1e-12);
    assert!(visibility(&map, &pos, c).occluded);

    let (j, visible) = info_gain(&map, &pos, &frontiers, &q);
    let expected = 1.0 + 0.5 * (1.0 - (q.d_star + 3.0) / q.r_max) + 0.0;
    assert!((j - expected).abs() < 1e-12, "{j} vs {expected}");
    assert_eq!(visible, 2);
}

#[test]
fn unknown_voxels_attenuate_visibility() {
    let dims = [24, 8, 8];
    let mut map = box_map(dims);
    for k in keys(dims) {
        map.set_voxel(k, empty(1.0));
    }
    let from = map.config().center(VoxelKey::new(2, 4, 4));
    let target = VoxelKey::new(20, 4, 4);
    assert_eq!(visibility(&map, &from, target).value(), 1.0);
    map.set_voxel(VoxelKey::new(10, 4, 4), Default::default());
    map.set_voxel(VoxelKey::new(12, 4, 4), Default::default());
    assert!((visibility(&map, &from, target).value() - (-2.0f64).exp()).abs() < 1e-12);
    // The target's own state is not part of its visibility.
    map.set_voxel(target, occupied(1.0));
    assert!(!visibility(&map, &from, target).occluded);
    map.set_voxel(VoxelKey::new(15, 4, 4), occupied(1.0));
    assert_eq!(visibility(&map, &from, target).value(), 0.0);
}

fn candidate(p: Vec3, key: i32) -> ViewCandidate {
    ViewCandidate {
        position: p,
        view_dir: Vec3::x(),
        frontier_key: VoxelKey::new(key, 0, 0),
        band: Band::Optimal,
        yaw: 0.0,
    }
}

#[test]
fn navigation_examples() {
    let moving = RobotState {
        position: Vec3::zeros(),
        velocity: Vec3::new(0.0, 2.0, 0.0),
        yaw: 0.0,
    };
    assert!((nav_score(&moving, &Vec3::new(2.0, 0.0, 0.0), 1.0, VS) - 0.25).abs() < 1e-12);
    assert!((nav_score(&moving, &Vec3::new(0.0, 3.0, 0.0), 3.0, VS) - 1.0).abs() < 1e-12);
    assert!(nav_score(&moving, &Vec3::new(0.0, -3.0, 0.0), 1.0, VS).abs() < 1e-12);

    let cands = [candidate(Vec3::new(1.0, 0.0, 0.0), 0), candidate(Vec3::new(2.0, 0.0, 0.0), 1)];
    let scores = combine_scores(VS, &cands, &[(2.0, 4), (1.0, 2)], &RobotState::at_rest(Vec3::zeros()), 0.5, 0.5);
    assert!((scores[0].j_info - 0.5).abs() < 1e-12);
    assert!((scores[1].j_nav - 0.5).abs() < 1e-12);
    for s in &scores {
        assert!((s.total - (0.5 * s.j_info + 0.5 * s.j_nav)).abs() < 1e-12);
    }
}

#[test]
fn exact_ties_go_to_the_nearer_candidate() {
    let from = Vec3::zeros();
    let cands = [candidate(Vec3::new(3.0, 0.0, 0.0), 0), candidate(Vec3::new(0.0, 2.0, 0.0), 5)];
    let s = ScoreBreakdown {
        j_raw: 1.0,
        visible: 1,
        j_info: 1.0,
        j_nav: 0.5,
        total: 0.75,
    };
    assert_eq!(select_best(&cands, &[s, s], &from), Some(1));
    assert_eq!(select_best(&cands[..1], &[s], &from), Some(0));
    assert_eq!(select_best(&[], &[], &from), None);
}

fn unit_vec() -> impl Strategy<Value = Vec3> {
    (-PI..PI, -1.0f64..1.0).prop_map(|(az, z)| {
        let r = (1.0 - z * z).sqrt();
        Vec3::new(r * az.cos(), r * az.sin(), z)
    })
}

proptest! {
    #[test]
    fn rotation_keeps_distance_and_elevation_limit(n in unit_vec(), attempt in 0usize..12) {
        let lim = deg(30.0);
        let d = rotation_fallback(&n, attempt, deg(30.0), lim);
        prop_assert!((d.norm() - 1.0).abs() < 1e-12);
        prop_assert!(elevation(&d).abs() <= lim + 1e-12);
        if attempt > 0 {
            let d0 = rotation_fallback(&n, 0, deg(30.0), lim);
            prop_assert!((elevation(&d) - elevation(&d0)).abs() < 1e-12);
        }
    }

    #[test]
    fn heading_factor_in_unit_range(v in unit_vec(), s in 0.0f64..5.0, d in unit_vec()) {
        let psi = heading_factor(&(v * s), &d);
        prop_assert!((0.0..=1.0).contains(&psi));
        if s >= 0.01 {
            let perp = v.cross(&d);
            if perp.norm() > 1e-6 {
                let psi_perp = heading_factor(&(v * s), &perp);
                prop_assert!((psi_perp - 0.5).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn selection_is_scale_invariant(
        totals in prop::collection::vec(0.0f64..1.0, 1..30),
        c in 1e-3f64..1e3,
    ) {
        let cands: Vec<ViewCandidate> = (0..totals.len())
            .map(|i| candidate(Vec3::new(i as f64 * 0.7, (i % 3) as f64, 0.0), i as i32))
            .collect();
        let mk = |t: f64| ScoreBreakdown { j_raw: 0.0, visible: 0, j_info: 0.0, j_nav: 0.0, total: t };
        let a: Vec<_> = totals.iter().map(|&t| mk(t)).collect();
        let b: Vec<_> = totals.iter().map(|&t| mk(t * c)).collect();
        let from = Vec3::new(1.0, 1.0, 0.0);
        prop_assert_eq!(select_best(&cands, &a, &from), select_best(&cands, &b, &from));
    }

    #[test]
    fn extra_unknown_never_raises_visibility(x in 3i32..19, seed_cells in prop::collection::vec(3i32..19, 0..4)) {
        let dims = [24, 8, 8];
        let mut map = box_map(dims);
        for k in keys(dims) {
            map.set_voxel(k, empty(1.0));
        }
        for cx in seed_cells {
            map.set_voxel(VoxelKey::new(cx, 4, 4), Default::default());
        }
        let from = map.config().center(VoxelKey::new(1, 4, 4));
        let target = VoxelKey::new(21, 4, 4);
        let before = visibility(&map, &from, target).value();
        map.set_voxel(VoxelKey::new(x, 4, 4), Default::default());
        prop_assert!(visibility(&map, &from, target).value() <= before);
    }
}
