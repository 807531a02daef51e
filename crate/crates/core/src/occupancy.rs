//! Log-odds update of every record touched this cycle.

use crate::logodds::{state_of, OccState};
use crate::store::MapState;

impl MapState {
    /// For each record hit or missed this cycle:
    /// `l <- clamp(l + n_hit * l_hit + n_miss * l_miss, l_min, l_max)`,
    /// counters reset, state reclassified. Flips to or from `Occ` arm the
    /// inflation flag, entries into `Occ` are recorded as newly occupied, and
    /// `Free` records are scheduled for deletion.
    ///
    /// Returns the number of state changes.
    pub fn apply_occupancy_check(&mut self) -> usize {
        let cfg = &self.cfg;
        let mut changes = 0;
        for &id in &self.touched {
            let rec = &mut self.arena[id];
            let before = rec.state;
            let delta = f64::from(rec.n_hit) * cfg.l_hit + f64::from(rec.n_miss) * cfg.l_miss;
            rec.log_odds = (rec.log_odds + delta).clamp(cfg.l_min, cfg.l_max);
            rec.n_hit = 0;
            rec.n_miss = 0;
            let after = state_of(rec.log_odds, cfg);
            rec.state = after;
            if after != before {
                changes += 1;
            }
            if (before == OccState::Occ) != (after == OccState::Occ) {
                rec.occ_changed = true;
                if !rec.pending_inflation {
                    rec.pending_inflation = true;
                    self.pending_inflation.push(id);
                }
                if after == OccState::Occ {
                    self.newly_occ.push(rec.key);
                    if !self.shared_cycle {
                        self.export_queue.push(rec.key);
                    }
                }
            }
            if after == OccState::Free && !rec.in_del {
                rec.in_del = true;
                self.b_del.push(id);
            }
        }
        changes
    }
}

#[cfg(test)]
mod tests {
    use crate::config::MapConfig;
    use crate::key::VoxelKey;
    use crate::logodds::OccState;
    use crate::store::MapState;

    // Frozen from mpmath: logit(0.8) + logit(0.65), -2 logit(0.65), logit(0.97).
    const FRESH_PLUS_HIT: f64 = 2.005_333_569_526_114;
    const TWO_MISSES: f64 = -1.238_078_416_812_446_9;
    const L_MAX: f64 = 3.476_098_689_835_273;

    fn setup() -> (MapState, crate::store::VoxelId) {
        let mut m = MapState::new(MapConfig::default()).unwrap();
        m.begin_cycle(false);
        let id = m.observe_hit(VoxelKey::ZERO);
        (m, id)
    }

    #[test]
    fn fresh_record_single_hit() {
        let (mut m, id) = setup();
        assert_eq!(m.apply_occupancy_check(), 1);
        let r = m.record(id).unwrap();
        assert!((r.log_odds() - FRESH_PLUS_HIT).abs() < 1e-12);
        assert_eq!(r.state(), OccState::Occ);
        assert!(r.occ_changed());
        assert_eq!(m.newly_occupied(), &[VoxelKey::ZERO]);
        assert_eq!((r.hits(), r.misses()), (0, 0));
    }

    #[test]
    fn two_misses_free_an_unknown_record() {
        let (mut m, id) = setup();
        m.arena[id].log_odds = 0.0;
        m.arena[id].n_hit = 0;
        m.add_miss(id);
        m.add_miss(id);
        m.apply_occupancy_check();
        let r = m.record(id).unwrap();
        assert!((r.log_odds() - TWO_MISSES).abs() < 1e-12);
        assert!(r.log_odds() <= m.config().l_free_th);
        assert_eq!(r.state(), OccState::Free);
        assert!(!r.occ_changed());
        assert_eq!(m.b_del, vec![id]);
    }

    #[test]
    fn clamps_at_upper_bound() {
        let (mut m, id) = setup();
        m.arena[id].log_odds = 3.40;
        m.apply_occupancy_check();
        assert!((m.record(id).unwrap().log_odds() - L_MAX).abs() < 1e-12);
    }

    #[test]
    fn hit_and_miss_net_out() {
        let (mut m, id) = setup();
        m.arena[id].log_odds = 0.5;
        m.add_miss(id);
        m.apply_occupancy_check();
        let r = m.record(id).unwrap();
        assert!((r.log_odds() - 0.5).abs() < 1e-12);
        assert_eq!(r.state(), OccState::Unknown);
    }
}
