//! Voxel records, the two hash containers, task buffers and the history buffer.
//!
//! Every key has at most one [`VoxelRecord`], owned by a slab arena. The
//! occupancy map, inflation map, task buffers, history buffer and inflation
//! tables all hold [`VoxelId`] handles into that arena, so an update made
//! through any of them is seen by all.

use crate::config::MapConfig;
use crate::history::{HistSlot, HistoryList};
use crate::inflate::InflationNeighborhood;
use crate::key::{KeyMap, Point3, VoxelKey};
use crate::logodds::OccState;

/// Handle to a live record. Equality is record identity; a handle to a
/// destroyed record never compares equal to a later record in the same slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VoxelId {
    index: u32,
    generation: u32,
}

/// The two key-indexed containers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Container {
    Occupancy,
    Inflation,
}

#[derive(Debug, Clone)]
pub struct VoxelRecord {
    pub(crate) key: VoxelKey,
    pub(crate) log_odds: f64,
    pub(crate) n_hit: u32,
    pub(crate) n_miss: u32,
    pub(crate) state: OccState,
    pub(crate) occ_changed: bool,
    /// Number of occupied records whose inflation table holds this one.
    pub(crate) n_inflating: u32,
    /// Records this one inflates; non-empty only while its inflation is applied.
    pub(crate) inflates: Vec<VoxelId>,
    pub(crate) hist_slot: Option<HistSlot>,
    pub(crate) in_occ: bool,
    pub(crate) in_inf: bool,
    pub(crate) in_new: bool,
    pub(crate) in_keep: bool,
    pub(crate) in_del: bool,
    pub(crate) in_touched: bool,
    pub(crate) pending_inflation: bool,
    pub(crate) last_touch: u64,
}

impl VoxelRecord {
    fn fresh(key: VoxelKey, cycle: u64) -> Self {
        Self {
            key,
            log_odds: 0.0,
            n_hit: 0,
            n_miss: 0,
            state: OccState::Unknown,
            occ_changed: false,
            n_inflating: 0,
            inflates: Vec::new(),
            hist_slot: None,
            in_occ: false,
            in_inf: false,
            in_new: false,
            in_keep: false,
            in_del: false,
            in_touched: false,
            pending_inflation: false,
            last_touch: cycle,
        }
    }

    pub fn key(&self) -> VoxelKey {
        self.key
    }
    pub fn log_odds(&self) -> f64 {
        self.log_odds
    }
    pub fn hits(&self) -> u32 {
        self.n_hit
    }
    pub fn misses(&self) -> u32 {
        self.n_miss
    }
    pub fn state(&self) -> OccState {
        self.state
    }
    pub fn occ_changed(&self) -> bool {
        self.occ_changed
    }
    pub fn inflation_count(&self) -> u32 {
        self.n_inflating
    }
    pub fn inflation_table(&self) -> &[VoxelId] {
        &self.inflates
    }
    pub fn hist_slot(&self) -> Option<HistSlot> {
        self.hist_slot
    }
    pub fn in_occupancy_map(&self) -> bool {
        self.in_occ
    }
    pub fn in_inflation_map(&self) -> bool {
        self.in_inf
    }
    pub fn last_touch(&self) -> u64 {
        self.last_touch
    }

    /// Drops occupancy evidence; used when a record leaves the occupancy map
    /// but stays alive because neighbors still inflate it.
    fn reset_occupancy(&mut self) {
        self.log_odds = 0.0;
        self.n_hit = 0;
        self.n_miss = 0;
        self.state = OccState::Unknown;
        self.occ_changed = false;
        self.pending_inflation = false;
    }
}

#[derive(Debug, Clone)]
struct Slot {
    generation: u32,
    record: Option<VoxelRecord>,
}

#[derive(Debug, Clone, Default)]
pub(crate) struct RecordArena {
    slots: Vec<Slot>,
    free: Vec<u32>,
    live: usize,
}

impl RecordArena {
    fn alloc(&mut self, rec: VoxelRecord) -> VoxelId {
        self.live += 1;
        if let Some(index) = self.free.pop() {
            let slot = &mut self.slots[index as usize];
            slot.record = Some(rec);
            VoxelId {
                index,
                generation: slot.generation,
            }
        } else {
            let index = u32::try_from(self.slots.len()).expect("record arena exceeds u32 slots");
            self.slots.push(Slot {
                generation: 0,
                record: Some(rec),
            });
            VoxelId {
                index,
                generation: 0,
            }
        }
    }

    fn release(&mut self, id: VoxelId) -> VoxelRecord {
        let slot = &mut self.slots[id.index as usize];
        assert_eq!(slot.generation, id.generation, "release of a stale handle");
        let rec = slot.record.take().expect("release of a vacant slot");
        slot.generation = slot.generation.wrapping_add(1);
        self.free.push(id.index);
        self.live -= 1;
        rec
    }

    #[inline]
    pub(crate) fn get(&self, id: VoxelId) -> Option<&VoxelRecord> {
        let slot = self.slots.get(id.index as usize)?;
        if slot.generation == id.generation {
            slot.record.as_ref()
        } else {
            None
        }
    }

    #[inline]
    pub(crate) fn get_mut(&mut self, id: VoxelId) -> Option<&mut VoxelRecord> {
        let slot = self.slots.get_mut(id.index as usize)?;
        if slot.generation == id.generation {
            slot.record.as_mut()
        } else {
            None
        }
    }

    fn iter(&self) -> impl Iterator<Item = (VoxelId, &VoxelRecord)> + '_ {
        self.slots.iter().enumerate().filter_map(|(i, s)| {
            s.record.as_ref().map(|r| {
                (
                    VoxelId {
                        index: i as u32,
                        generation: s.generation,
                    },
                    r,
                )
            })
        })
    }

    pub(crate) fn len(&self) -> usize {
        self.live
    }
}

impl std::ops::Index<VoxelId> for RecordArena {
    type Output = VoxelRecord;

    #[inline]
    fn index(&self, id: VoxelId) -> &VoxelRecord {
        self.get(id).expect("dangling voxel handle")
    }
}

impl std::ops::IndexMut<VoxelId> for RecordArena {
    #[inline]
    fn index_mut(&mut self, id: VoxelId) -> &mut VoxelRecord {
        self.get_mut(id).expect("dangling voxel handle")
    }
}

/// Complete mapping state: containers, buffers, parameters.
///
/// Single writer. All mutation goes through `&mut self`; readers may borrow
/// it between update cycles.
#[derive(Debug, Clone)]
pub struct MapState {
    pub(crate) cfg: MapConfig,
    pub(crate) arena: RecordArena,
    pub(crate) occ_map: KeyMap<VoxelId>,
    pub(crate) inf_map: KeyMap<VoxelId>,
    pub(crate) b_new: Vec<VoxelId>,
    pub(crate) b_keep: Vec<VoxelId>,
    pub(crate) b_del: Vec<VoxelId>,
    /// Every record hit or missed this cycle, in first-touch order.
    pub(crate) touched: Vec<VoxelId>,
    pub(crate) b_his: HistoryList<VoxelId>,
    /// Records with an unprocessed occupancy flip, including those the
    /// inflation range gate has deferred.
    pub(crate) pending_inflation: Vec<VoxelId>,
    pub(crate) neighborhood: InflationNeighborhood,
    pub(crate) cycle: u64,
    /// Keys that turned occupied during the current cycle.
    pub(crate) newly_occ: Vec<VoxelKey>,
    /// Locally observed newly occupied keys awaiting export.
    pub(crate) export_queue: Vec<VoxelKey>,
    pub(crate) pose: Option<Point3>,
    pub(crate) last_stamp: Option<f64>,
    pub(crate) last_period: f64,
    pub(crate) n_inflated: usize,
    pub(crate) shared_cycle: bool,
    pub(crate) last_retention: crate::retain::RetentionOutcome,
}

impl MapState {
    pub fn new(cfg: MapConfig) -> Result<Self, crate::error::ConfigError> {
        cfg.validate()?;
        let neighborhood = InflationNeighborhood::build(cfg.res, cfg.r_obs);
        Ok(Self {
            cfg,
            arena: RecordArena::default(),
            occ_map: KeyMap::default(),
            inf_map: KeyMap::default(),
            b_new: Vec::new(),
            b_keep: Vec::new(),
            b_del: Vec::new(),
            touched: Vec::new(),
            b_his: HistoryList::new(),
            pending_inflation: Vec::new(),
            neighborhood,
            cycle: 0,
            newly_occ: Vec::new(),
            export_queue: Vec::new(),
            pose: None,
            last_stamp: None,
            last_period: 0.0,
            n_inflated: 0,
            shared_cycle: false,
            last_retention: Default::default(),
        })
    }

    /// Keys deleted and evicted by the most recent cycle.
    pub fn last_retention(&self) -> &crate::retain::RetentionOutcome {
        &self.last_retention
    }

    pub fn config(&self) -> &MapConfig {
        &self.cfg
    }

    pub fn cycle(&self) -> u64 {
        self.cycle
    }

    /// Last sensor origin, used as the reference for the inflation range gate.
    pub fn pose(&self) -> Option<Point3> {
        self.pose
    }

    /// Sets the inflation gate reference for maps fed only by shared frames.
    pub fn set_pose(&mut self, p: Point3) {
        self.pose = Some(p);
    }

    pub fn neighborhood(&self) -> &InflationNeighborhood {
        &self.neighborhood
    }

    /// Number of records in the occupancy map.
    pub fn occupancy_len(&self) -> usize {
        self.occ_map.len()
    }

    /// Number of records in the inflation map.
    pub fn inflation_len(&self) -> usize {
        self.inf_map.len()
    }

    /// Number of records in the occupied state.
    pub fn occupied_count(&self) -> usize {
        self.occ_map
            .values()
            .filter(|&&id| self.arena[id].state == OccState::Occ)
            .count()
    }

    /// Number of records with a positive inflation count.
    pub fn inflated_count(&self) -> usize {
        self.n_inflated
    }

    pub fn record_count(&self) -> usize {
        self.arena.len()
    }

    pub fn history_len(&self) -> usize {
        self.b_his.len()
    }

    /// Keys in the history buffer, oldest first.
    pub fn history_keys(&self) -> Vec<VoxelKey> {
        self.b_his.iter().map(|&id| self.arena[id].key).collect()
    }

    /// Keys that turned occupied during the most recent cycle.
    pub fn newly_occupied(&self) -> &[VoxelKey] {
        &self.newly_occ
    }

    pub fn record(&self, id: VoxelId) -> Option<&VoxelRecord> {
        self.arena.get(id)
    }

    /// Record with `key` in either container.
    pub fn lookup(&self, key: VoxelKey) -> Option<&VoxelRecord> {
        self.inf_map
            .get(&key)
            .or_else(|| self.occ_map.get(&key))
            .map(|&id| &self.arena[id])
    }

    /// Occupied keys, sorted.
    pub fn occupied_keys(&self) -> Vec<VoxelKey> {
        let mut keys: Vec<VoxelKey> = self
            .occ_map
            .iter()
            .filter(|(_, &id)| self.arena[id].state == OccState::Occ)
            .map(|(&k, _)| k)
            .collect();
        keys.sort_unstable();
        keys
    }

    /// Keys with a positive inflation count, sorted.
    pub fn inflated_keys(&self) -> Vec<VoxelKey> {
        let mut keys: Vec<VoxelKey> = self
            .inf_map
            .iter()
            .filter(|(_, &id)| self.arena[id].n_inflating > 0)
            .map(|(&k, _)| k)
            .collect();
        keys.sort_unstable();
        keys
    }

    /// Every record in the occupancy map, sorted by key.
    pub fn occupancy_records(&self) -> Vec<&VoxelRecord> {
        let mut recs: Vec<&VoxelRecord> = self.occ_map.values().map(|&id| &self.arena[id]).collect();
        recs.sort_unstable_by_key(|r| r.key);
        recs
    }

    /// Every live record, sorted by key.
    pub fn all_records(&self) -> Vec<(VoxelId, &VoxelRecord)> {
        let mut recs: Vec<_> = self.arena.iter().collect();
        recs.sort_unstable_by_key(|(_, r)| r.key);
        recs
    }

    /// Rough resident size of the map structures, bytes.
    pub fn memory_estimate(&self) -> usize {
        use std::mem::size_of;
        let records = self.arena.slots.capacity() * size_of::<Slot>();
        let tables: usize = self
            .arena
            .iter()
            .map(|(_, r)| r.inflates.capacity() * size_of::<VoxelId>())
            .sum();
        let entry = size_of::<VoxelKey>() + size_of::<VoxelId>() + 1;
        let maps = (self.occ_map.capacity() + self.inf_map.capacity()) * entry;
        let hist = self.b_his.len() * (size_of::<VoxelId>() + 12);
        records + tables + maps + hist
    }

    /// Creates a record for `key`. The key must be absent from both containers.
    pub fn make_voxel(&mut self, key: VoxelKey) -> VoxelId {
        assert!(
            !self.occ_map.contains_key(&key) && !self.inf_map.contains_key(&key),
            "duplicate record for {key}"
        );
        self.arena.alloc(VoxelRecord::fresh(key, self.cycle))
    }

    pub fn find_voxel(&self, container: Container, key: VoxelKey) -> Option<VoxelId> {
        match container {
            Container::Occupancy => self.occ_map.get(&key).copied(),
            Container::Inflation => self.inf_map.get(&key).copied(),
        }
    }

    /// Idempotent.
    pub fn insert_handle(&mut self, container: Container, id: VoxelId) {
        let rec = &mut self.arena[id];
        let (map, flag) = match container {
            Container::Occupancy => (&mut self.occ_map, &mut rec.in_occ),
            Container::Inflation => (&mut self.inf_map, &mut rec.in_inf),
        };
        if !*flag {
            let prev = map.insert(rec.key, id);
            debug_assert!(prev.is_none(), "second record for key {}", rec.key);
            *flag = true;
        }
    }

    /// Idempotent. Does not destroy the record.
    pub fn remove_handle(&mut self, container: Container, id: VoxelId) {
        let rec = &mut self.arena[id];
        let (map, flag) = match container {
            Container::Occupancy => (&mut self.occ_map, &mut rec.in_occ),
            Container::Inflation => (&mut self.inf_map, &mut rec.in_inf),
        };
        if *flag {
            map.remove(&rec.key);
            *flag = false;
        }
    }

    /// Takes a record out of the occupancy map: undoes the inflation it
    /// applied, unlinks it from the history buffer, and destroys it unless
    /// occupied neighbors still inflate it, in which case it stays in the
    /// inflation map with its occupancy evidence cleared.
    pub fn remove_from_map(&mut self, id: VoxelId) {
        self.deflate(id);
        if let Some(slot) = self.arena[id].hist_slot.take() {
            self.b_his.erase(slot);
        }
        self.remove_handle(Container::Occupancy, id);
        let rec = &mut self.arena[id];
        if rec.n_inflating > 0 {
            rec.reset_occupancy();
        } else {
            self.destroy(id);
        }
    }

    /// Erases an unreferenced record from the inflation map and frees it.
    pub(crate) fn destroy(&mut self, id: VoxelId) {
        let rec = &self.arena[id];
        debug_assert!(!rec.in_occ && rec.n_inflating == 0 && rec.inflates.is_empty());
        debug_assert!(rec.hist_slot.is_none());
        self.remove_handle(Container::Inflation, id);
        self.arena.release(id);
    }

    /// Walks every structure and checks the cross-references.
    ///
    /// `end_of_cycle` additionally requires empty task buffers, occupancy
    /// keys contained in the inflation map, and clamped log-odds.
    pub fn audit(&self, end_of_cycle: bool) -> Result<(), String> {
        use std::collections::HashMap;

        for (map, which) in [(&self.occ_map, "occ"), (&self.inf_map, "inf")] {
            for (&k, &id) in map {
                let rec = self
                    .arena
                    .get(id)
                    .ok_or_else(|| format!("{which} map entry {k} is dangling"))?;
                if rec.key != k {
                    return Err(format!("{which} map entry {k} points at record {}", rec.key));
                }
            }
        }
        let mut expected_n: HashMap<VoxelId, u32> = HashMap::new();
        let mut inflated = 0usize;
        for (id, rec) in self.arena.iter() {
            if rec.in_occ != (self.occ_map.get(&rec.key) == Some(&id)) {
                return Err(format!("{}: occ membership flag disagrees with map", rec.key));
            }
            if rec.in_inf != (self.inf_map.get(&rec.key) == Some(&id)) {
                return Err(format!("{}: inf membership flag disagrees with map", rec.key));
            }
            if !rec.in_occ && !rec.in_inf {
                return Err(format!("{}: record is in no container", rec.key));
            }
            if !rec.in_occ && rec.n_inflating == 0 && end_of_cycle {
                return Err(format!("{}: unreferenced inflated-only record", rec.key));
            }
            match rec.hist_slot {
                Some(slot) if self.b_his.get(slot) != Some(&id) => {
                    return Err(format!("{}: history slot does not point back", rec.key));
                }
                Some(_) if !rec.in_occ => {
                    return Err(format!("{}: in history but not in occupancy map", rec.key));
                }
                _ => {}
            }
            for &t in &rec.inflates {
                if self.arena.get(t).is_none() {
                    return Err(format!("{}: inflation table holds a dangling handle", rec.key));
                }
                *expected_n.entry(t).or_default() += 1;
            }
            if rec.n_inflating > 0 {
                inflated += 1;
            }
            if end_of_cycle {
                if rec.in_occ && !rec.in_inf {
                    return Err(format!("{}: in occupancy map but not inflation map", rec.key));
                }
                if rec.in_occ && !(self.cfg.l_min <= rec.log_odds && rec.log_odds <= self.cfg.l_max) {
                    return Err(format!("{}: log-odds {} outside clamp", rec.key, rec.log_odds));
                }
                if rec.in_new || rec.in_keep || rec.in_del || rec.in_touched || rec.n_hit != 0 || rec.n_miss != 0 {
                    return Err(format!("{}: per-cycle state not reset", rec.key));
                }
                if rec.hist_slot.is_some() != (rec.state == OccState::Occ && rec.in_occ) {
                    // Occupied records that were only missed keep their slot;
                    // a record that became occupied without a visit cannot exist.
                    return Err(format!(
                        "{}: history membership {} but state {:?}",
                        rec.key,
                        rec.hist_slot.is_some(),
                        rec.state
                    ));
                }
            }
        }
        for (id, rec) in self.arena.iter() {
            let want = expected_n.get(&id).copied().unwrap_or(0);
            if rec.n_inflating != want {
                return Err(format!(
                    "{}: inflation count {} but {} tables reference it",
                    rec.key, rec.n_inflating, want
                ));
            }
        }
        if inflated != self.n_inflated {
            return Err(format!("inflated counter {} but {} records inflated", self.n_inflated, inflated));
        }
        let his: Vec<VoxelId> = self.b_his.iter().copied().collect();
        for &id in &his {
            let rec = self.arena.get(id).ok_or("history holds a dangling handle")?;
            if rec.state != OccState::Occ {
                return Err(format!("{}: non-occupied record in history", rec.key));
            }
        }
        if end_of_cycle {
            if let Some(lim) = self.cfg.n_lim {
                if his.len() > lim {
                    return Err(format!("history length {} exceeds limit {lim}", his.len()));
                }
            }
            if !(self.b_new.is_empty() && self.b_keep.is_empty() && self.b_del.is_empty() && self.touched.is_empty()) {
                return Err("task buffers not cleared".into());
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn map() -> MapState {
        MapState::new(MapConfig::default()).unwrap()
    }

    #[test]
    fn one_record_shared_by_both_containers() {
        let mut m = map();
        let k = VoxelKey::new(1, 2, 3);
        let id = m.make_voxel(k);
        m.insert_handle(Container::Occupancy, id);
        m.insert_handle(Container::Inflation, id);
        assert_eq!(m.find_voxel(Container::Occupancy, k), Some(id));
        assert_eq!(m.find_voxel(Container::Inflation, k), Some(id));
        // a write through one container is visible through the other
        let id = m.find_voxel(Container::Occupancy, k).unwrap();
        m.arena[id].log_odds = 1.5;
        assert_eq!(m.arena[m.find_voxel(Container::Inflation, k).unwrap()].log_odds, 1.5);
        assert_eq!(m.record_count(), 1);
    }

    #[test]
    fn fresh_record_is_unknown() {
        let mut m = map();
        let id = m.make_voxel(VoxelKey::new(0, 0, 0));
        let r = m.record(id).unwrap();
        assert_eq!(r.log_odds(), 0.0);
        assert_eq!(r.state(), OccState::Unknown);
        assert_eq!(r.inflation_count(), 0);
        assert!(r.inflation_table().is_empty());
        assert!(r.hist_slot().is_none());
        assert_eq!(crate::logodds::state_of(0.0, m.config()), OccState::Unknown);
    }

    #[test]
    #[should_panic(expected = "duplicate record")]
    fn duplicate_creation_is_a_contract_violation() {
        let mut m = map();
        let k = VoxelKey::new(4, 4, 4);
        let id = m.make_voxel(k);
        m.insert_handle(Container::Inflation, id);
        m.make_voxel(k);
    }

    #[test]
    fn find_on_empty_and_after_removal() {
        let mut m = map();
        let k = VoxelKey::new(-1, 0, 7);
        assert_eq!(m.find_voxel(Container::Occupancy, k), None);
        assert_eq!(m.find_voxel(Container::Inflation, k), None);
        let id = m.make_voxel(k);
        m.insert_handle(Container::Occupancy, id);
        m.insert_handle(Container::Inflation, id);
        m.remove_from_map(id);
        assert_eq!(m.find_voxel(Container::Occupancy, k), None);
        assert_eq!(m.find_voxel(Container::Inflation, k), None);
        assert!(m.record(id).is_none());
    }

    #[test]
    fn container_ops_are_idempotent() {
        let mut m = map();
        let id = m.make_voxel(VoxelKey::new(1, 1, 1));
        m.insert_handle(Container::Occupancy, id);
        m.insert_handle(Container::Occupancy, id);
        assert_eq!(m.occupancy_len(), 1);
        m.remove_handle(Container::Occupancy, id);
        m.remove_handle(Container::Occupancy, id);
        assert_eq!(m.occupancy_len(), 0);
    }

    #[test]
    fn stale_handles_do_not_alias_reused_slots() {
        let mut m = map();
        let a = m.make_voxel(VoxelKey::new(0, 0, 0));
        m.insert_handle(Container::Inflation, a);
        m.destroy(a);
        let b = m.make_voxel(VoxelKey::new(9, 9, 9));
        assert_ne!(a, b);
        assert!(m.record(a).is_none());
        assert!(m.record(b).is_some());
    }
}
