use crate::key::VoxelKey;
use crate::store::MapState;

/// Newly occupied keys of one or more update cycles, ready to transmit.
#[derive(Debug, Clone, PartialEq)]
pub struct ShareFrame {
    pub sender_id: u32,
    /// Strictly increasing per sender.
    pub seq: u32,
    /// Microseconds since the epoch.
    pub stamp: u64,
    /// Sender resolution, meters.
    pub res: f32,
    /// Sorted, deduplicated.
    pub keys: Vec<VoxelKey>,
}

impl ShareFrame {
    /// Sorts and deduplicates `keys`.
    pub fn new(sender_id: u32, seq: u32, stamp: u64, res: f32, mut keys: Vec<VoxelKey>) -> Self {
        keys.sort_unstable();
        keys.dedup();
        Self { sender_id, seq, stamp, res, keys }
    }

    pub fn key_count(&self) -> u32 {
        self.keys.len() as u32
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }
}

impl MapState {
    /// Drains the locally observed newly occupied keys into a frame. Keys that
    /// became occupied through shared input are never included. Emits an empty
    /// frame when nothing changed.
    pub fn collect_export_frame(&mut self, sender_id: u32, seq: u32) -> ShareFrame {
        let keys = std::mem::take(&mut self.export_queue);
        let stamp = self.last_stamp.map_or(0, |s| (s.max(0.0) * 1e6).round() as u64);
        ShareFrame::new(sender_id, seq, stamp, self.cfg.res as f32, keys)
    }
}
