//! Obstacle inflation through per-record look-up tables.
//!
//! An occupied record keeps the handles of every record within `r_obs` of it
//! in its table and bumps their inflation counts. When it stops being
//! occupied the same table is walked to undo exactly those increments, so
//! un-inflation never searches the map.

use crate::key::{distance, key_to_center, Point3, VoxelKey};
use crate::logodds::OccState;
use crate::store::{Container, MapState, VoxelId};

/// Slack on the radius comparison so that radii that are whole multiples of
/// the resolution in decimal (0.3 m at 0.1 m) include the boundary shell.
const RADIUS_EPS: f64 = 1e-9;

/// Key offsets within `r_obs` of a voxel, center to center, including zero.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct InflationNeighborhood {
    offsets: Vec<VoxelKey>,
}

impl InflationNeighborhood {
    pub fn build(res: f64, r_obs: f64) -> Self {
        let r = r_obs / res;
        let r2 = r * r * (1.0 + RADIUS_EPS) + RADIUS_EPS;
        let n = (r * (1.0 + RADIUS_EPS) + RADIUS_EPS).floor() as i32;
        let mut offsets = Vec::new();
        for dz in -n..=n {
            for dy in -n..=n {
                for dx in -n..=n {
                    let d = VoxelKey::new(dx, dy, dz);
                    if d.norm_sq() as f64 <= r2 {
                        offsets.push(d);
                    }
                }
            }
        }
        Self { offsets }
    }

    /// Whether two cells `delta` apart are within the radius.
    pub fn contains(&self, delta: VoxelKey) -> bool {
        self.offsets.binary_search_by(|o| cmp_zyx(*o, delta)).is_ok()
    }

    pub fn offsets(&self) -> &[VoxelKey] {
        &self.offsets
    }

    pub fn len(&self) -> usize {
        self.offsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.offsets.is_empty()
    }
}

// Offsets are generated in z, y, x order.
fn cmp_zyx(a: VoxelKey, b: VoxelKey) -> std::cmp::Ordering {
    (a.iz, a.iy, a.ix).cmp(&(b.iz, b.iy, b.ix))
}

impl MapState {
    /// Processes records whose occupancy flipped. A record inside the range
    /// gate (`distance < d_inf` from `pos_self`) inflates its neighborhood if
    /// it is now occupied, or releases its table if it no longer is. Records
    /// outside the gate keep their flag and are retried on later cycles.
    ///
    /// With no `pos_self` every record passes the gate.
    pub fn apply_inflation(&mut self, pos_self: Option<Point3>) -> usize {
        let pending = std::mem::take(&mut self.pending_inflation);
        let mut deferred = Vec::new();
        let mut processed = 0;
        for id in pending {
            let Some(rec) = self.arena.get(id) else {
                continue;
            };
            if !rec.pending_inflation {
                continue;
            }
            if let Some(p) = pos_self {
                if distance(key_to_center(rec.key, &self.cfg), p) >= self.cfg.d_inf {
                    deferred.push(id);
                    continue;
                }
            }
            let inflating = !rec.inflates.is_empty();
            let occupied = rec.state == OccState::Occ;
            let rec = &mut self.arena[id];
            rec.pending_inflation = false;
            rec.occ_changed = false;
            if occupied && !inflating {
                self.inflate(id);
                processed += 1;
            } else if !occupied && inflating {
                self.deflate(id);
                processed += 1;
            }
        }
        self.pending_inflation = deferred;
        processed
    }

    /// Whether `p` lies in an occupied or inflated cell.
    pub fn query_inflated_occupied(&self, p: Point3) -> bool {
        let k = crate::key::pos_to_key(p, &self.cfg);
        self.inf_map
            .get(&k)
            .or_else(|| self.occ_map.get(&k))
            .map(|&id| {
                let r = &self.arena[id];
                r.n_inflating > 0 || r.state == OccState::Occ
            })
            .unwrap_or(false)
    }

    pub(crate) fn inflate(&mut self, id: VoxelId) {
        let center = self.arena[id].key;
        debug_assert!(self.arena[id].inflates.is_empty());
        let mut table = Vec::with_capacity(self.neighborhood.len());
        for i in 0..self.neighborhood.offsets.len() {
            let k = center + self.neighborhood.offsets[i];
            let target = match self.inf_map.get(&k) {
                Some(&t) => t,
                None => {
                    let t = self.make_voxel(k);
                    self.insert_handle(Container::Inflation, t);
                    t
                }
            };
            let rec = &mut self.arena[target];
            if rec.n_inflating == 0 {
                self.n_inflated += 1;
            }
            rec.n_inflating += 1;
            table.push(target);
        }
        self.arena[id].inflates = table;
    }

    /// Undoes the inflation recorded in `id`'s table. Inflated-only records
    /// whose count drops to zero are destroyed.
    pub(crate) fn deflate(&mut self, id: VoxelId) {
        let table = std::mem::take(&mut self.arena[id].inflates);
        for t in table {
            let rec = &mut self.arena[t];
            assert!(rec.n_inflating > 0, "inflation count underflow at {}", rec.key);
            rec.n_inflating -= 1;
            if rec.n_inflating == 0 {
                self.n_inflated -= 1;
                if !rec.in_occ {
                    self.destroy(t);
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::MapConfig;
    use crate::share::ShareFrame;

    fn count_ball(r: i64) -> usize {
        let mut n = 0;
        for x in -r..=r {
            for y in -r..=r {
                for z in -r..=r {
                    if x * x + y * y + z * z <= r * r {
                        n += 1;
                    }
                }
            }
        }
        n
    }

    #[test]
    fn neighborhood_sizes() {
        assert_eq!(InflationNeighborhood::build(0.1, 0.0).offsets(), &[VoxelKey::ZERO]);
        assert_eq!(InflationNeighborhood::build(0.1, 0.2).len(), 33);
        assert_eq!(count_ball(2), 33);
        assert_eq!(InflationNeighborhood::build(0.2, 0.2).len(), 7);
        assert_eq!(InflationNeighborhood::build(0.1, 0.3).len(), count_ball(3));
        assert_eq!(InflationNeighborhood::build(0.1, 0.05).len(), 1);
    }

    #[test]
    fn neighborhood_is_symmetric() {
        for (res, r) in [(0.1, 0.2), (0.1, 0.35), (0.25, 1.0), (0.05, 0.23)] {
            let nb = InflationNeighborhood::build(res, r);
            for &d in nb.offsets() {
                assert!(nb.contains(VoxelKey::ZERO - d));
            }
        }
    }

    fn occupy(map: &mut MapState, keys: &[VoxelKey]) {
        let f = ShareFrame::new(0, 0, 0, map.config().res as f32, keys.to_vec());
        map.update_shared(&f).unwrap();
    }

    fn brute_force_counts(map: &MapState) -> Vec<(VoxelKey, u32)> {
        let occ = map.occupied_keys();
        let r = map.config().r_obs / map.config().res;
        map.all_records()
            .into_iter()
            .map(|(_, rec)| {
                let n = occ
                    .iter()
                    .filter(|&&o| ((o - rec.key()).norm_sq() as f64).sqrt() <= r + 1e-9)
                    .count() as u32;
                (rec.key(), n)
            })
            .collect()
    }

    fn actual_counts(map: &MapState) -> Vec<(VoxelKey, u32)> {
        map.all_records().into_iter().map(|(_, r)| (r.key(), r.inflation_count())).collect()
    }

    #[test]
    fn single_occupied_voxel_inflates_its_ball() {
        let mut m = MapState::new(MapConfig::default()).unwrap();
        occupy(&mut m, &[VoxelKey::ZERO]);
        assert_eq!(m.inflated_count(), 33);
        assert_eq!(m.inflation_len(), 33);
        let own = m.lookup(VoxelKey::ZERO).unwrap();
        assert_eq!(own.inflation_count(), 1);
        assert_eq!(own.inflation_table().len(), 33);
        assert_eq!(brute_force_counts(&m), actual_counts(&m));
        m.audit(true).unwrap();
    }

    #[test]
    fn freeing_releases_every_count() {
        let mut m = MapState::new(MapConfig::default()).unwrap();
        occupy(&mut m, &[VoxelKey::ZERO]);
        // Force the voxel free with misses.
        let id = m.find_voxel(Container::Occupancy, VoxelKey::ZERO).unwrap();
        m.begin_cycle(false);
        for _ in 0..6 {
            m.add_miss(id);
        }
        m.finish_cycle(None);
        assert_eq!(m.inflated_count(), 0);
        assert_eq!(m.record_count(), 0);
        m.audit(true).unwrap();
    }

    #[test]
    fn shared_neighbors_count_twice() {
        let mut m = MapState::new(MapConfig::default()).unwrap();
        let a = VoxelKey::new(0, 0, 0);
        let b = VoxelKey::new(1, 0, 0);
        occupy(&mut m, &[a, b]);
        assert_eq!(brute_force_counts(&m), actual_counts(&m));
        assert_eq!(m.lookup(VoxelKey::new(2, 0, 0)).unwrap().inflation_count(), 2);
        assert_eq!(m.lookup(VoxelKey::new(-2, 0, 0)).unwrap().inflation_count(), 1);

        let id = m.find_voxel(Container::Occupancy, b).unwrap();
        m.begin_cycle(false);
        for _ in 0..6 {
            m.add_miss(id);
        }
        m.finish_cycle(None);
        assert_eq!(m.lookup(VoxelKey::new(2, 0, 0)).unwrap().inflation_count(), 1);
        // b is still inflated by a, so it survives as an inflated-only record
        let rb = m.lookup(b).unwrap();
        assert!(!rb.in_occupancy_map());
        assert_eq!(rb.inflation_count(), 1);
        assert_eq!(m.lookup(VoxelKey::new(3, 0, 0)).map(|r| r.inflation_count()), None);
        assert_eq!(brute_force_counts(&m), actual_counts(&m));
        m.audit(true).unwrap();
    }

    #[test]
    fn query_planner_view() {
        let mut m = MapState::new(MapConfig::default()).unwrap();
        assert!(!m.query_inflated_occupied([0.0, 0.0, 0.0]));
        occupy(&mut m, &[VoxelKey::new(5, 5, 5)]);
        assert!(m.query_inflated_occupied([0.55, 0.55, 0.55]));
        // r_obs - res/2 along +x from the center lands in the (7,5,5) cell
        assert!(m.query_inflated_occupied([0.55 + 0.2 - 0.05, 0.55, 0.55]));
        assert!(!m.query_inflated_occupied([0.55 + 0.3, 0.55, 0.55]));
    }

    #[test]
    fn range_gate_defers_until_close() {
        let cfg = MapConfig { d_inf: 1.0, ..MapConfig::default() };
        let mut m = MapState::new(cfg).unwrap();
        m.set_pose([10.0, 0.0, 0.0]);
        occupy(&mut m, &[VoxelKey::ZERO]);
        // outside the gate: occupied but not inflated, flag still armed
        assert_eq!(m.inflated_count(), 0);
        assert!(m.lookup(VoxelKey::ZERO).unwrap().occ_changed());
        m.set_pose([0.5, 0.0, 0.0]);
        assert_eq!(m.apply_inflation(m.pose()), 1);
        assert_eq!(m.inflated_count(), 33);
        assert!(!m.lookup(VoxelKey::ZERO).unwrap().occ_changed());
    }
}
