//! Bench fixtures.

use voxhash::sim::SimSpec;
use voxhash::{MapConfig, MapState, SensorFrame, ShareFrame};

/// The first `n` frames of a built-in preset.
pub fn preset_frames(name: &str, n: usize) -> Vec<SensorFrame> {
    let mut spec = SimSpec::preset(name).expect("known preset");
    spec.trajectory.frames = Some(n);
    spec.build().expect("preset builds").frames().collect()
}

/// A map warmed up on `frames`.
pub fn warm_map(cfg: MapConfig, frames: &[SensorFrame]) -> MapState {
    let mut m = MapState::new(cfg).expect("valid config");
    for f in frames {
        m.update(f).expect("finite frame");
    }
    m
}

/// Export frames gathered while mapping `frames`, one per cycle.
pub fn export_frames(frames: &[SensorFrame]) -> Vec<ShareFrame> {
    let mut m = MapState::new(MapConfig::default()).expect("default config");
    let mut out = Vec::with_capacity(frames.len());
    for (seq, f) in frames.iter().enumerate() {
        m.update(f).expect("finite frame");
        out.push(m.collect_export_frame(0, seq as u32));
    }
    out
}
