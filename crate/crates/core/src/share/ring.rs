use std::collections::VecDeque;

use thiserror::Error;

use super::ShareFrame;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RingError {
    #[error("sequence {seq} does not follow last pushed sequence {last}")]
    NonMonotonic { seq: u32, last: u32 },
}

/// Fixed-capacity outbox. Pushing into a full ring overwrites the oldest
/// frame; frames leave only when acknowledged.
#[derive(Debug, Clone)]
pub struct FrameRing {
    capacity: usize,
    slots: VecDeque<ShareFrame>,
    last_seq: Option<u32>,
    overwritten: u64,
}

impl FrameRing {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity >= 1, "ring capacity must be at least 1");
        Self {
            capacity,
            slots: VecDeque::with_capacity(capacity),
            last_seq: None,
            overwritten: 0,
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    /// Sequence number for the next frame.
    pub fn next_seq(&self) -> u32 {
        self.last_seq.map_or(0, |s| s.wrapping_add(1))
    }

    /// Frames dropped to make room since creation.
    pub fn overwritten(&self) -> u64 {
        self.overwritten
    }

    pub fn push(&mut self, frame: ShareFrame) -> Result<(), RingError> {
        if let Some(last) = self.last_seq {
            if frame.seq <= last {
                return Err(RingError::NonMonotonic { seq: frame.seq, last });
            }
        }
        if self.slots.len() == self.capacity {
            self.slots.pop_front();
            self.overwritten += 1;
        }
        self.last_seq = Some(frame.seq);
        self.slots.push_back(frame);
        Ok(())
    }

    /// Held frames, oldest first. Non-destructive.
    pub fn drain(&self) -> Vec<&ShareFrame> {
        self.slots.iter().collect()
    }

    /// Removes every held frame with `seq <= upto`.
    pub fn ack(&mut self, upto: u32) -> usize {
        let before = self.slots.len();
        while self.slots.front().is_some_and(|f| f.seq <= upto) {
            self.slots.pop_front();
        }
        before - self.slots.len()
    }
}
