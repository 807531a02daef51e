//! Sender map, outbox ring, lossy link and receiver map wired together.

use std::collections::HashSet;

use serde::Serialize;

use crate::config::MapConfig;
use crate::error::{ConfigError, IngestError};
use crate::integrate::SensorFrame;
use crate::share::{decode_frame, encode_frame, FrameRing};
use crate::store::MapState;

use super::channel::{ChannelSpec, GapEpisode, LossyChannel};

/// Bytes per raw point on the wire: three `f32` coordinates and an
/// intensity word.
pub const RAW_POINT_BYTES: u64 = 16;

#[derive(Debug, Clone, PartialEq)]
pub struct RelaySpec {
    pub sender: MapConfig,
    pub receiver: MapConfig,
    pub channel: ChannelSpec,
    pub sender_id: u32,
}

impl RelaySpec {
    pub fn new(cfg: MapConfig, channel: ChannelSpec) -> Self {
        Self { sender: cfg.clone(), receiver: cfg, channel, sender_id: 1 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct RelayReport {
    pub frames: u64,
    pub raw_points: u64,
    pub raw_bytes: u64,
    pub encoded_bytes: u64,
    pub reduction_pct: f64,
    pub exported_keys: u64,
    pub frames_emitted: u64,
    pub frames_transmitted: u64,
    /// Frames dropped from the full outbox before they could be sent.
    pub frames_overwritten: u64,
    /// Sequence numbers the receiver never saw.
    pub seq_missing: u64,
    pub link_down_ticks: u64,
    pub gap_episodes: Vec<GapEpisode>,
    pub sender_occ: usize,
    pub receiver_occ: usize,
    pub retained: usize,
    pub retention_pct: f64,
}

pub struct Relay {
    sender: MapState,
    receiver: MapState,
    ring: FrameRing,
    channel: LossyChannel,
    sender_id: u32,
    seq: u32,
    expected_seq: u32,
    report: RelayReport,
}

impl Relay {
    /// The outbox holds `spec.sender.ring_capacity` frames.
    pub fn new(spec: RelaySpec) -> Result<Self, ConfigError> {
        let ring = FrameRing::new(spec.sender.ring_capacity);
        Ok(Self {
            sender: MapState::new(spec.sender)?,
            receiver: MapState::new(spec.receiver)?,
            ring,
            channel: LossyChannel::new(spec.channel),
            sender_id: spec.sender_id,
            seq: 0,
            expected_seq: 0,
            report: RelayReport::default(),
        })
    }

    /// One tick: the sender integrates `frame` and queues its delta; if the
    /// link is up the whole outbox is sent, decoded by the receiver, merged
    /// and acknowledged. Returns the encoded frames sent during this tick.
    pub fn step(&mut self, frame: &SensorFrame) -> Result<Vec<Vec<u8>>, IngestError> {
        self.sender.update(frame)?;
        let r = &mut self.report;
        r.frames += 1;
        r.raw_points += frame.points.len() as u64;
        let out = self.sender.collect_export_frame(self.sender_id, self.seq);
        self.seq = self.seq.wrapping_add(1);
        r.exported_keys += out.keys.len() as u64;
        r.frames_emitted += 1;
        self.ring.push(out).expect("sequence numbers increase");

        if !self.channel.link_up() {
            return Ok(Vec::new());
        }
        let wire: Vec<Vec<u8>> = self.ring.drain().into_iter().map(encode_frame).collect();
        let mut last = None;
        for bytes in &wire {
            let r = &mut self.report;
            r.encoded_bytes += bytes.len() as u64;
            r.frames_transmitted += 1;
            let f = decode_frame(bytes).expect("frames produced by the encoder decode");
            r.seq_missing += u64::from(f.seq.wrapping_sub(self.expected_seq));
            self.expected_seq = f.seq.wrapping_add(1);
            last = Some(f.seq);
            self.receiver.update_shared(&f)?;
        }
        if let Some(seq) = last {
            self.ring.ack(seq);
        }
        Ok(wire)
    }

    /// Live parameter change on the sender.
    pub fn update_sender_params(&mut self, update: &crate::config::ParamUpdate) -> Result<MapConfig, ConfigError> {
        self.sender.update_params(update)
    }

    pub fn sender(&self) -> &MapState {
        &self.sender
    }

    pub fn receiver(&self) -> &MapState {
        &self.receiver
    }

    pub fn report(&self) -> RelayReport {
        let mut r = self.report.clone();
        r.raw_bytes = r.raw_points * RAW_POINT_BYTES;
        r.reduction_pct = if r.raw_bytes > 0 {
            100.0 * (1.0 - r.encoded_bytes as f64 / r.raw_bytes as f64)
        } else {
            0.0
        };
        r.frames_overwritten = self.ring.overwritten();
        r.gap_episodes = self.channel.gaps().to_vec();
        r.link_down_ticks = r.gap_episodes.iter().map(|g| g.len).sum();
        let sent = self.sender.occupied_keys();
        let got: HashSet<_> = self.receiver.occupied_keys().into_iter().collect();
        r.sender_occ = sent.len();
        r.receiver_occ = got.len();
        r.retained = sent.iter().filter(|k| got.contains(k)).count();
        r.retention_pct = if sent.is_empty() { 100.0 } else { 100.0 * r.retained as f64 / sent.len() as f64 };
        r
    }
}

/// Runs every frame through a fresh relay.
pub fn run_relay<'a>(
    frames: impl IntoIterator<Item = &'a SensorFrame>,
    spec: RelaySpec,
) -> Result<(RelayReport, Relay), RelayError> {
    let mut relay = Relay::new(spec)?;
    for f in frames {
        relay.step(f)?;
    }
    Ok((relay.report(), relay))
}

#[derive(Debug, thiserror::Error)]
pub enum RelayError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Ingest(#[from] IngestError),
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frames() -> Vec<SensorFrame> {
        (0..30)
            .map(|i| {
                // parallel rays, one row each, so no ray crosses an earlier hit
                let y = 0.1 * f64::from(i) + 0.05;
                SensorFrame::new(f64::from(i) * 0.1, [0.05, y, 0.05], vec![[2.05, y, 0.05], [2.05, y, 1.05]])
            })
            .collect()
    }

    fn spec(ring: usize, channel: ChannelSpec) -> RelaySpec {
        RelaySpec::new(MapConfig { ring_capacity: ring, ..MapConfig::default() }, channel)
    }

    #[test]
    fn lossless_relay_copies_occupancy() {
        let (r, relay) = run_relay(&frames(), spec(50, ChannelSpec::default())).unwrap();
        assert_eq!(r.frames_transmitted, 30);
        assert_eq!(r.seq_missing, 0);
        assert_eq!(r.retention_pct, 100.0);
        assert_eq!(relay.receiver().occupied_keys(), relay.sender().occupied_keys());
        assert!(relay.ring.is_empty());
    }

    #[test]
    fn total_outage_sends_nothing() {
        let ch = ChannelSpec { loss_rate: 1.0, ..ChannelSpec::default() };
        let (r, relay) = run_relay(&frames(), spec(50, ch)).unwrap();
        assert_eq!(r.encoded_bytes, 0);
        assert_eq!(r.reduction_pct, 100.0);
        assert_eq!(relay.receiver().occupied_count(), 0);
        assert_eq!(r.retention_pct, 0.0);
    }

    #[test]
    fn outage_covered_by_the_ring_is_lossless() {
        let ch = ChannelSpec { outages: vec![(5, 10)], ..ChannelSpec::default() };
        let (r, _) = run_relay(&frames(), spec(20, ch)).unwrap();
        assert_eq!(r.retention_pct, 100.0);
        assert_eq!((r.frames_overwritten, r.seq_missing), (0, 0));
        assert_eq!(r.link_down_ticks, 10);
    }

    #[test]
    fn small_ring_shows_the_gap() {
        let ch = ChannelSpec { outages: vec![(5, 10)], ..ChannelSpec::default() };
        let (r, _) = run_relay(&frames(), spec(4, ch)).unwrap();
        assert_eq!(r.frames_overwritten, 7);
        assert_eq!(r.seq_missing, 7);
        assert!(r.retention_pct < 100.0);
    }
}
