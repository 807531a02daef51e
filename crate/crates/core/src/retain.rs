//! Sequential voxel removal and live parameter changes.

use crate::config::{MapConfig, ParamUpdate};
use crate::error::ConfigError;
use crate::inflate::InflationNeighborhood;
use crate::key::VoxelKey;
use crate::logodds::OccState;
use crate::store::{MapState, VoxelId};

/// Keys removed by one retention pass.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RetentionOutcome {
    /// Removed because they were classified free.
    pub deleted: Vec<VoxelKey>,
    /// Removed from the front of the history buffer to respect `n_lim`,
    /// oldest first.
    pub evicted: Vec<VoxelKey>,
}

impl MapState {
    /// Updates the history buffer from this cycle's task buffers, purges
    /// free records, then evicts the least recently updated occupied
    /// records until the buffer fits `n_lim`.
    pub fn apply_retention(&mut self) -> RetentionOutcome {
        let mut out = RetentionOutcome::default();

        for id in std::mem::take(&mut self.b_new) {
            let rec = &mut self.arena[id];
            debug_assert!(rec.hist_slot.is_none());
            if rec.state == OccState::Occ {
                rec.hist_slot = Some(self.b_his.push_back(id));
            } else if rec.state == OccState::Free {
                self.schedule_delete(id);
            }
        }
        for id in std::mem::take(&mut self.b_keep) {
            let rec = &mut self.arena[id];
            if let Some(slot) = rec.hist_slot.take() {
                self.b_his.erase(slot);
            }
            if rec.state == OccState::Occ {
                rec.hist_slot = Some(self.b_his.push_back(id));
            } else if rec.state == OccState::Free {
                self.schedule_delete(id);
            }
        }
        // Records that were only missed keep their recency unless they
        // stopped being occupied.
        for &id in &self.touched {
            let rec = &mut self.arena[id];
            if !rec.in_new && !rec.in_keep && rec.state != OccState::Occ {
                if let Some(slot) = rec.hist_slot.take() {
                    self.b_his.erase(slot);
                }
            }
        }
        for id in std::mem::take(&mut self.touched) {
            let rec = &mut self.arena[id];
            rec.in_new = false;
            rec.in_keep = false;
            rec.in_touched = false;
        }

        for id in std::mem::take(&mut self.b_del) {
            let rec = &mut self.arena[id];
            rec.in_del = false;
            out.deleted.push(rec.key);
            self.remove_from_map(id);
        }

        if let Some(limit) = self.cfg.n_lim {
            while self.b_his.len() > limit {
                let id = self.b_his.pop_front().expect("non-empty history");
                let rec = &mut self.arena[id];
                rec.hist_slot = None;
                out.evicted.push(rec.key);
                self.remove_from_map(id);
            }
        }
        out
    }

    fn schedule_delete(&mut self, id: VoxelId) {
        let rec = &mut self.arena[id];
        if !rec.in_del {
            rec.in_del = true;
            self.b_del.push(id);
        }
    }

    /// Changes parameters between cycles. `res` and `origin` are fixed for
    /// the life of the map. A new `r_obs` rebuilds the neighborhood, releases
    /// every inflation table and re-arms all occupied records so the next
    /// inflation pass re-inflates them. A smaller `n_lim` is enforced at the
    /// next retention pass.
    pub fn update_params(&mut self, update: &ParamUpdate) -> Result<MapConfig, ConfigError> {
        let next = self.cfg.merged(update)?;
        let r_obs_changed = next.r_obs != self.cfg.r_obs;
        self.cfg = next;
        if r_obs_changed {
            self.neighborhood = InflationNeighborhood::build(self.cfg.res, self.cfg.r_obs);
            let mut occupied: Vec<VoxelId> = self.occ_map.values().copied().collect();
            occupied.sort_unstable_by_key(|&id| self.arena[id].key);
            for &id in &occupied {
                if !self.arena[id].inflates.is_empty() {
                    self.deflate(id);
                }
            }
            for id in occupied {
                let rec = &mut self.arena[id];
                if rec.state == OccState::Occ {
                    rec.occ_changed = true;
                    if !rec.pending_inflation {
                        rec.pending_inflation = true;
                        self.pending_inflation.push(id);
                    }
                }
            }
        }
        Ok(self.cfg.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::share::ShareFrame;

    fn k(i: i32) -> VoxelKey {
        VoxelKey::new(i * 10, 0, 0)
    }

    fn hit(m: &mut MapState, keys: &[VoxelKey]) -> RetentionOutcome {
        m.begin_cycle(true);
        for &key in keys {
            m.observe_hit(key);
        }
        let out = m.finish_cycle(None);
        m.audit(true).unwrap();
        out
    }

    fn limited(n: usize) -> MapState {
        MapState::new(MapConfig { n_lim: Some(n), r_obs: 0.0, ..MapConfig::default() }).unwrap()
    }

    #[test]
    fn oldest_is_evicted() {
        let mut m = limited(2);
        hit(&mut m, &[k(0)]);
        hit(&mut m, &[k(1)]);
        let out = hit(&mut m, &[k(2)]);
        assert_eq!(out.evicted, vec![k(0)]);
        assert_eq!(m.occupied_keys(), vec![k(1), k(2)]);
        assert_eq!(m.history_keys(), vec![k(1), k(2)]);
    }

    #[test]
    fn re_observation_refreshes_recency() {
        let mut m = limited(2);
        hit(&mut m, &[k(0)]);
        hit(&mut m, &[k(1)]);
        hit(&mut m, &[k(0)]);
        let out = hit(&mut m, &[k(2)]);
        assert_eq!(out.evicted, vec![k(1)]);
        assert_eq!(m.history_keys(), vec![k(0), k(2)]);
    }

    #[test]
    fn free_records_are_deleted_without_a_limit() {
        let mut m = MapState::new(MapConfig::default()).unwrap();
        hit(&mut m, &[k(0)]);
        let id = m.find_voxel(crate::store::Container::Occupancy, k(0)).unwrap();
        m.begin_cycle(false);
        for _ in 0..5 {
            m.add_miss(id);
        }
        let out = m.finish_cycle(None);
        assert_eq!(out.deleted, vec![k(0)]);
        assert_eq!(m.record_count(), 0);
        assert_eq!(m.history_len(), 0);
        m.audit(true).unwrap();
    }

    #[test]
    fn shrinking_the_limit_keeps_the_most_recent() {
        let mut m = MapState::new(MapConfig { n_lim: Some(50_000), ..MapConfig::default() }).unwrap();
        for i in 0..10 {
            hit(&mut m, &[k(i)]);
        }
        m.update_params(&ParamUpdate { n_lim: Some(Some(1)), ..Default::default() }).unwrap();
        let out = hit(&mut m, &[]);
        assert_eq!(out.evicted.len(), 9);
        assert_eq!(m.occupied_keys(), vec![k(9)]);
    }

    #[test]
    fn input_range_change_spares_existing_records() {
        let mut m = MapState::new(MapConfig::default()).unwrap();
        let o = [0.05, 0.05, 0.05];
        m.update(&crate::integrate::SensorFrame::new(0.0, o, vec![[20.05, 0.05, 0.05]])).unwrap();
        m.update_params(&ParamUpdate { d_in: Some(10.0), ..Default::default() }).unwrap();
        let s = m.update(&crate::integrate::SensorFrame::new(0.1, o, vec![[0.05, 30.05, 0.05]])).unwrap();
        assert_eq!(s.n_points_dropped_range, 1);
        assert_eq!(m.occupied_keys(), vec![VoxelKey::new(200, 0, 0)]);
    }

    #[test]
    fn zero_radius_leaves_only_self_counts() {
        let mut m = MapState::new(MapConfig::default()).unwrap();
        let f = ShareFrame::new(0, 0, 0, 0.1, vec![VoxelKey::ZERO, VoxelKey::new(1, 0, 0), VoxelKey::new(5, 5, 5)]);
        m.update_shared(&f).unwrap();
        assert!(m.inflated_count() > 3);
        m.update_params(&ParamUpdate { r_obs: Some(0.0), ..Default::default() }).unwrap();
        hit(&mut m, &[]);
        assert_eq!(m.inflated_count(), 3);
        for (_, r) in m.all_records() {
            assert_eq!(r.inflation_count(), 1);
            assert_eq!(r.state(), OccState::Occ);
        }
    }

    #[test]
    fn rejects_resolution_and_bad_thresholds() {
        let mut m = MapState::new(MapConfig::default()).unwrap();
        assert!(m.update_params(&ParamUpdate { res: Some(0.05), ..Default::default() }).is_err());
        let bad = ParamUpdate { l_free_th: Some(5.0), ..Default::default() };
        assert!(m.update_params(&bad).is_err());
        assert_eq!(m.config(), &MapConfig::default());
    }
}
