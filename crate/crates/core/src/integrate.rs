//! Input data update: point classification into task buffers, hit counting
//! and raycast miss counting, plus the full per-frame update cycle.

use std::time::Instant;

use serde::Serialize;

use crate::error::IngestError;
use crate::key::{distance, is_finite, key_to_center, pos_to_key, Point3, VoxelKey};
use crate::raycast::GridRay;
use crate::retain::RetentionOutcome;
use crate::share::ShareFrame;
use crate::store::{Container, MapState, VoxelId};

/// One update cycle worth of sensor input, world frame.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SensorFrame {
    /// Seconds.
    pub stamp: f64,
    pub origin: Point3,
    pub points: Vec<Point3>,
}

impl SensorFrame {
    pub fn new(stamp: f64, origin: Point3, points: Vec<Point3>) -> Self {
        Self { stamp, origin, points }
    }
}

/// Per-cycle counters and phase timings.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct UpdateStats {
    pub n_points_in: usize,
    pub n_points_dropped_range: usize,
    pub n_points_dropped_nonfinite: usize,
    pub n_new: usize,
    pub n_keep: usize,
    pub n_rays: usize,
    pub ray_cells_traversed: usize,
    /// Distinct existing records that received at least one miss.
    pub ray_voxels_touched: usize,
    pub n_state_changes: usize,
    pub n_reinflated: usize,
    pub n_deleted: usize,
    pub n_evicted: usize,
    pub t_input_ms: f64,
    pub t_occ_ms: f64,
    pub t_inf_ms: f64,
    pub t_ret_ms: f64,
    pub t_total_ms: f64,
}

fn ms_since(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

impl MapState {
    /// Runs one full cycle for a sensor frame: input, occupancy check,
    /// inflation and retention.
    pub fn update(&mut self, frame: &SensorFrame) -> Result<UpdateStats, IngestError> {
        let t0 = Instant::now();
        let mut stats = self.ingest_frame(frame)?;
        stats.t_input_ms = ms_since(t0);
        self.finish_timed(&mut stats, t0);
        Ok(stats)
    }

    /// Runs one full cycle for a frame received from a peer.
    pub fn update_shared(&mut self, frame: &ShareFrame) -> Result<UpdateStats, IngestError> {
        let t0 = Instant::now();
        let mut stats = self.ingest_shared_frame(frame)?;
        stats.t_input_ms = ms_since(t0);
        self.finish_timed(&mut stats, t0);
        Ok(stats)
    }

    fn finish_timed(&mut self, stats: &mut UpdateStats, t0: Instant) {
        let t = Instant::now();
        stats.n_state_changes = self.apply_occupancy_check();
        stats.t_occ_ms = ms_since(t);
        let t = Instant::now();
        stats.n_reinflated = self.apply_inflation(self.pose);
        stats.t_inf_ms = ms_since(t);
        let t = Instant::now();
        let ret = self.apply_retention();
        stats.n_deleted = ret.deleted.len();
        stats.n_evicted = ret.evicted.len();
        self.last_retention = ret;
        stats.t_ret_ms = ms_since(t);
        stats.t_total_ms = ms_since(t0);
    }

    /// Classifies every in-range point of `frame` and casts its ray.
    ///
    /// All points are classified before any ray is cast, so the records a
    /// ray can miss are the same whatever the point order.
    pub fn ingest_frame(&mut self, frame: &SensorFrame) -> Result<UpdateStats, IngestError> {
        if !is_finite(frame.origin) {
            return Err(IngestError::NonFiniteOrigin);
        }
        if let Some(last) = self.last_stamp {
            if frame.stamp < last - self.last_period {
                return Err(IngestError::StampRegression {
                    stamp: frame.stamp,
                    last,
                    tolerance: self.last_period,
                });
            }
            if frame.stamp > last {
                self.last_period = frame.stamp - last;
            }
        }
        self.last_stamp = Some(self.last_stamp.map_or(frame.stamp, |l| l.max(frame.stamp)));
        self.begin_cycle(false);
        self.pose = Some(frame.origin);

        let mut stats = UpdateStats {
            n_points_in: frame.points.len(),
            ..UpdateStats::default()
        };
        let mut targets = Vec::with_capacity(frame.points.len());
        for &p in &frame.points {
            if !is_finite(p) {
                stats.n_points_dropped_nonfinite += 1;
                continue;
            }
            if distance(p, frame.origin) > self.cfg.d_in {
                stats.n_points_dropped_range += 1;
                continue;
            }
            let key = pos_to_key(p, &self.cfg);
            self.observe_hit(key);
            targets.push(key);
        }
        let touched_before = self.touched.len();
        for &key in &targets {
            stats.ray_cells_traversed += self.raycast_process(frame.origin, key);
        }
        stats.n_rays = targets.len();
        stats.ray_voxels_touched = self.touched.len() - touched_before;
        stats.n_new = self.b_new.len();
        stats.n_keep = self.b_keep.len();
        Ok(stats)
    }

    /// Treats each shared key as a hit at its voxel center. No rays are cast
    /// and the keys that turn occupied are not queued for re-export.
    pub fn ingest_shared_frame(&mut self, frame: &ShareFrame) -> Result<UpdateStats, IngestError> {
        if frame.res != self.cfg.res as f32 {
            return Err(IngestError::ResolutionMismatch {
                frame: frame.res,
                map: self.cfg.res,
            });
        }
        self.begin_cycle(true);
        for &key in &frame.keys {
            self.observe_hit(key);
        }
        Ok(UpdateStats {
            n_points_in: frame.keys.len(),
            n_new: self.b_new.len(),
            n_keep: self.b_keep.len(),
            ..UpdateStats::default()
        })
    }

    /// Walks from `pos_self` to the center of `target` and adds a miss to
    /// every existing occupancy record strictly before the target. Never
    /// creates records. Returns the number of cells walked.
    pub fn raycast_process(&mut self, pos_self: Point3, target: VoxelKey) -> usize {
        let mut walked = 0;
        for cell in GridRay::new(pos_self, target, &self.cfg) {
            walked += 1;
            if let Some(&id) = self.occ_map.get(&cell) {
                self.add_miss(id);
            }
        }
        walked
    }

    pub(crate) fn begin_cycle(&mut self, shared: bool) {
        self.cycle += 1;
        self.newly_occ.clear();
        self.shared_cycle = shared;
    }

    /// One hit on `key`, creating or promoting its record on first sight this
    /// cycle. A record entering the occupancy map is credited `logit(p_init)`.
    pub(crate) fn observe_hit(&mut self, key: VoxelKey) -> VoxelId {
        let id = match self.occ_map.get(&key) {
            Some(&id) => {
                let rec = &mut self.arena[id];
                if !rec.in_new && !rec.in_keep {
                    rec.in_keep = true;
                    self.b_keep.push(id);
                    self.insert_handle(Container::Inflation, id);
                }
                id
            }
            None => {
                let id = match self.inf_map.get(&key) {
                    Some(&id) => id,
                    None => {
                        let id = self.make_voxel(key);
                        self.insert_handle(Container::Inflation, id);
                        id
                    }
                };
                self.insert_handle(Container::Occupancy, id);
                let bonus = self.cfg.logit_init();
                let rec = &mut self.arena[id];
                rec.in_new = true;
                rec.log_odds += bonus;
                self.b_new.push(id);
                id
            }
        };
        let cycle = self.cycle;
        let rec = &mut self.arena[id];
        rec.n_hit += 1;
        rec.last_touch = cycle;
        if !rec.in_touched {
            rec.in_touched = true;
            self.touched.push(id);
        }
        id
    }

    pub(crate) fn add_miss(&mut self, id: VoxelId) {
        let rec = &mut self.arena[id];
        rec.n_miss += 1;
        if !rec.in_touched {
            rec.in_touched = true;
            self.touched.push(id);
        }
    }

    /// Occupancy check, inflation and retention without timing.
    pub fn finish_cycle(&mut self, pos_self: Option<Point3>) -> RetentionOutcome {
        self.apply_occupancy_check();
        self.apply_inflation(pos_self);
        let ret = self.apply_retention();
        self.last_retention = ret.clone();
        ret
    }

    /// Center of a key under this map's grid.
    pub fn key_center(&self, key: VoxelKey) -> Point3 {
        key_to_center(key, &self.cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::MapConfig;
    use crate::logodds::{logit_of, OccState};

    fn map(cfg: MapConfig) -> MapState {
        MapState::new(cfg).unwrap()
    }

    #[test]
    fn points_beyond_input_range_are_dropped() {
        let mut m = map(MapConfig { d_in: 10.0, ..MapConfig::default() });
        let f = SensorFrame::new(0.0, [0.0; 3], vec![[12.0, 0.0, 0.0]]);
        let s = m.update(&f).unwrap();
        assert_eq!(s.n_points_dropped_range, 1);
        assert_eq!(m.record_count(), 0);
    }

    #[test]
    fn fresh_hit_is_credited_initial_probability() {
        let mut m = map(MapConfig::default());
        let f = SensorFrame::new(0.0, [0.05, 0.05, 0.05], vec![[0.35, 0.05, 0.05]]);
        m.ingest_frame(&f).unwrap();
        let k = VoxelKey::new(3, 0, 0);
        let id = m.find_voxel(Container::Occupancy, k).unwrap();
        assert_eq!(m.find_voxel(Container::Inflation, k), Some(id));
        let r = m.record(id).unwrap();
        assert!((r.log_odds() - logit_of(0.8).unwrap()).abs() < 1e-12);
        assert_eq!(r.hits(), 1);
        assert!(m.b_new.contains(&id));
    }

    #[test]
    fn re_observation_goes_to_keep() {
        let mut m = map(MapConfig::default());
        let f = SensorFrame::new(0.0, [0.05, 0.05, 0.05], vec![[0.35, 0.05, 0.05]]);
        m.update(&f).unwrap();
        assert_eq!(m.occupied_count(), 1);
        let f = SensorFrame::new(0.1, [0.05, 0.05, 0.05], vec![[0.35, 0.05, 0.05]]);
        let s = m.ingest_frame(&f).unwrap();
        assert_eq!((s.n_new, s.n_keep), (0, 1));
        assert_eq!(m.occupancy_len(), 1);
    }

    #[test]
    fn ray_misses_only_existing_records() {
        let mut m = map(MapConfig::default());
        m.begin_cycle(false);
        let target = m.observe_hit(VoxelKey::new(5, 0, 0));
        let mid = m.observe_hit(VoxelKey::new(2, 0, 0));
        let before = m.occupancy_len();
        m.raycast_process([0.05, 0.05, 0.05], VoxelKey::new(5, 0, 0));
        assert_eq!(m.record(mid).unwrap().misses(), 1);
        assert_eq!(m.record(target).unwrap().misses(), 0);
        assert_eq!(m.occupancy_len(), before);

        let mut m = map(MapConfig::default());
        m.begin_cycle(false);
        let target = m.observe_hit(VoxelKey::new(5, 0, 0));
        m.raycast_process([0.05, 0.05, 0.05], VoxelKey::new(5, 0, 0));
        assert_eq!(m.record(target).unwrap().misses(), 0);
        assert_eq!(m.occupancy_len(), 1);
    }

    #[test]
    fn hits_accumulate_per_point() {
        let mut m = map(MapConfig::default());
        let pts = vec![[0.31, 0.01, 0.01], [0.32, 0.02, 0.02], [0.33, 0.03, 0.03]];
        m.ingest_frame(&SensorFrame::new(0.0, [0.05, 0.05, 0.05], pts)).unwrap();
        let r = m.lookup(VoxelKey::new(3, 0, 0)).unwrap();
        assert_eq!(r.hits(), 3);
        assert_eq!(m.b_new.len(), 1);
    }

    #[test]
    fn stamp_regression_beyond_one_period_is_rejected() {
        let mut m = map(MapConfig::default());
        let o = [0.0; 3];
        m.update(&SensorFrame::new(1.0, o, vec![])).unwrap();
        m.update(&SensorFrame::new(1.1, o, vec![])).unwrap();
        // within one period: accepted
        m.update(&SensorFrame::new(1.05, o, vec![])).unwrap();
        let err = m.update(&SensorFrame::new(0.5, o, vec![])).unwrap_err();
        assert!(matches!(err, IngestError::StampRegression { .. }));
    }

    #[test]
    fn non_finite_points_are_counted_not_fatal() {
        let mut m = map(MapConfig::default());
        let f = SensorFrame::new(0.0, [0.0; 3], vec![[f64::NAN, 0.0, 0.0], [1.0, f64::INFINITY, 0.0], [0.5, 0.5, 0.5]]);
        let s = m.update(&f).unwrap();
        assert_eq!(s.n_points_dropped_nonfinite, 2);
        assert_eq!(m.occupancy_len(), 1);
    }

    #[test]
    fn shared_frame_into_empty_map() {
        let mut m = map(MapConfig::default());
        let f = ShareFrame::new(1, 1, 0, 0.1, vec![VoxelKey::new(1, 2, 3)]);
        m.update_shared(&f).unwrap();
        assert_eq!(m.lookup(VoxelKey::new(1, 2, 3)).unwrap().state(), OccState::Occ);
        // a second copy is a keep visit: one more hit, then the clamp
        m.update_shared(&f).unwrap();
        let r = m.lookup(VoxelKey::new(1, 2, 3)).unwrap();
        let c = MapConfig::default();
        let want = (c.logit_init() + c.l_hit + c.l_hit).clamp(c.l_min, c.l_max);
        assert!((r.log_odds() - want).abs() < 1e-12);
        assert!(m.collect_export_frame(1, 0).keys.is_empty());
    }

    #[test]
    fn shared_frame_resolution_must_match() {
        let mut m = map(MapConfig::default());
        let f = ShareFrame::new(1, 1, 0, 0.2, vec![VoxelKey::ZERO]);
        assert!(matches!(m.update_shared(&f), Err(IngestError::ResolutionMismatch { .. })));
    }
}
