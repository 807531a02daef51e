use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use voxhash::sim::{simulate_scan, Pose, SimSpec};
use voxhash::{MapConfig, MapState, ParamUpdate, SensorFrame, VoxelKey};

fn room_frames(n: usize) -> Vec<SensorFrame> {
    let mut spec = SimSpec::preset("room").unwrap();
    spec.trajectory.frames = Some(n);
    spec.build().unwrap().frames().collect()
}

fn snapshot(m: &MapState) -> Vec<(VoxelKey, f64)> {
    let mut v: Vec<_> = m.occupancy_records().iter().map(|r| (r.key(), r.log_odds())).collect();
    v.sort_by_key(|e| e.0);
    v
}

#[test]
fn same_input_same_map() {
    let frames = room_frames(30);
    let cfg = MapConfig { n_lim: Some(4000), ..MapConfig::default() };
    let mut a = MapState::new(cfg.clone()).unwrap();
    let mut b = MapState::new(cfg).unwrap();
    for f in &frames {
        a.update(f).unwrap();
        b.update(f).unwrap();
    }
    assert_eq!(snapshot(&a), snapshot(&b));
    assert_eq!(a.history_keys(), b.history_keys());
    assert_eq!(a.inflated_keys(), b.inflated_keys());
}

#[test]
fn point_order_within_a_frame_does_not_matter() {
    let frames = room_frames(20);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut a = MapState::new(MapConfig::default()).unwrap();
    let mut b = MapState::new(MapConfig::default()).unwrap();
    for f in &frames {
        a.update(f).unwrap();
        let mut g = f.clone();
        g.points.shuffle(&mut rng);
        b.update(&g).unwrap();
    }
    assert_eq!(snapshot(&a), snapshot(&b));
    assert_eq!(a.inflated_keys(), b.inflated_keys());
}

#[test]
fn changing_r_obs_matches_a_fresh_map() {
    let frames = room_frames(10);
    let mut a = MapState::new(MapConfig::default()).unwrap();
    let mut b = MapState::new(MapConfig { r_obs: 0.35, ..MapConfig::default() }).unwrap();
    for (i, f) in frames.iter().enumerate() {
        if i == 5 {
            a.update_params(&ParamUpdate { r_obs: Some(0.35), ..Default::default() }).unwrap();
        }
        a.update(f).unwrap();
        b.update(f).unwrap();
        a.audit(true).unwrap();
    }
    assert_eq!(a.inflated_keys(), b.inflated_keys());
}

#[test]
fn shrinking_n_lim_applies_at_the_next_cycle() {
    let frames = room_frames(6);
    let mut m = MapState::new(MapConfig::default()).unwrap();
    for f in &frames[..5] {
        m.update(f).unwrap();
    }
    assert!(m.history_len() > 500);
    m.update_params(&ParamUpdate { n_lim: Some(Some(500)), ..Default::default() }).unwrap();
    m.update(&frames[5]).unwrap();
    assert_eq!(m.history_len(), 500);
    assert!(m.occupied_count() <= 500);
    m.audit(true).unwrap();
}

#[test]
fn fixed_params_cannot_change() {
    let mut m = MapState::new(MapConfig::default()).unwrap();
    assert!(m.update_params(&ParamUpdate { res: Some(0.2), ..Default::default() }).is_err());
    assert!(m.update_params(&ParamUpdate { l_hit: Some(-1.0), ..Default::default() }).is_err());
    assert_eq!(m.config(), &MapConfig::default());
}

#[test]
fn point_log_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("f.vxp");
    let frames = room_frames(4);
    voxhash::io::write_point_log(&path, &frames).unwrap();
    let back: Vec<_> = voxhash::io::open_point_log(&path).unwrap().collect::<Result<_, _>>().unwrap();
    assert_eq!(back.len(), frames.len());
    for (a, b) in frames.iter().zip(&back) {
        assert_eq!(a.origin, b.origin);
        assert_eq!(a.points.len(), b.points.len());
        // points are stored as f32
        for (p, q) in a.points.iter().zip(&b.points) {
            for i in 0..3 {
                assert!((p[i] - q[i]).abs() < 1e-5);
            }
        }
    }
}

#[test]
fn share_log_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("w.vxm");
    let mut m = MapState::new(MapConfig::default()).unwrap();
    let mut sent = Vec::new();
    for (seq, f) in room_frames(5).iter().enumerate() {
        m.update(f).unwrap();
        sent.push(m.collect_export_frame(1, seq as u32));
    }
    voxhash::share::write_share_log(&path, &sent).unwrap();
    assert_eq!(voxhash::share::read_share_log(&path).unwrap(), sent);
}

#[test]
fn repeated_scans_agree() {
    let spec = SimSpec::preset("room").unwrap();
    let sim = spec.build().unwrap();
    let pose = Pose { position: [4.0, 3.0, 1.2], yaw: 0.3 };
    let a = simulate_scan(&sim.scene, pose, &spec.sensor, 3);
    let b = simulate_scan(&sim.scene, pose, &spec.sensor, 3);
    assert_eq!(a.points, b.points);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn invariants_hold_after_every_cycle(
        frames in prop::collection::vec(
            (
                prop::array::uniform3(-1.0f64..1.0),
                prop::collection::vec(prop::array::uniform3(-3.0f64..3.0), 0..40),
            ),
            1..12,
        ),
        n_lim in prop::option::of(1usize..60),
        r_obs in 0.0f64..0.35,
    ) {
        let cfg = MapConfig { n_lim, r_obs, d_in: 4.0, ..MapConfig::default() };
        let mut m = MapState::new(cfg).unwrap();
        for (i, (origin, points)) in frames.into_iter().enumerate() {
            let stats = m.update(&SensorFrame::new(i as f64, origin, points)).unwrap();
            prop_assert!(m.audit(true).is_ok(), "{:?}", m.audit(true));
            if let Some(n) = n_lim {
                prop_assert!(m.history_len() <= n);
                prop_assert!(m.occupied_count() <= n);
            }
            prop_assert!(stats.n_points_in >= stats.n_points_dropped_range);
            for key in m.occupied_keys() {
                prop_assert!(m.query_inflated_occupied(m.key_center(key)));
            }
        }
    }
}
