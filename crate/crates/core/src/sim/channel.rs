//! Simulated link with bursty outages (two-state Gilbert-Elliott model).
//!
//! The link is either up or down for a whole tick. While down every
//! transmission is lost. The stationary fraction of down ticks is
//! `loss_rate` and down periods last `mean_burst` ticks on average.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChannelSpec {
    pub loss_rate: f64,
    /// Mean outage length in ticks, at least 1.
    pub mean_burst: f64,
    pub seed: u64,
    /// Forced outages as `(first_tick, length)`.
    pub outages: Vec<(u64, u64)>,
}

impl Default for ChannelSpec {
    fn default() -> Self {
        Self { loss_rate: 0.0, mean_burst: 1.0, seed: 0, outages: Vec::new() }
    }
}

/// A maximal run of down ticks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct GapEpisode {
    pub start: u64,
    pub len: u64,
}

#[derive(Debug, Clone)]
pub struct LossyChannel {
    spec: ChannelSpec,
    rng: ChaCha8Rng,
    down: bool,
    tick: u64,
    gaps: Vec<GapEpisode>,
}

impl LossyChannel {
    pub fn new(spec: ChannelSpec) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let down = spec.loss_rate >= 1.0 || (spec.loss_rate > 0.0 && rng.random::<f64>() < spec.loss_rate);
        Self { spec, rng, down, tick: 0, gaps: Vec::new() }
    }

    /// Advances one tick and reports whether the link carries data during
    /// it. Ticks are consumed in order.
    pub fn link_up(&mut self) -> bool {
        let tick = self.tick;
        self.tick += 1;
        let random_down = if self.spec.loss_rate <= 0.0 {
            false
        } else if self.spec.loss_rate >= 1.0 {
            true
        } else {
            if tick > 0 {
                let leave_bad = 1.0 / self.spec.mean_burst.max(1.0);
                let enter_bad = (self.spec.loss_rate * leave_bad / (1.0 - self.spec.loss_rate)).min(1.0);
                let p = if self.down { leave_bad } else { enter_bad };
                if self.rng.random::<f64>() < p {
                    self.down = !self.down;
                }
            }
            self.down
        };
        let forced = self.spec.outages.iter().any(|&(s, l)| tick >= s && tick < s + l);
        let up = !(random_down || forced);
        if !up {
            match self.gaps.last_mut() {
                Some(g) if g.start + g.len == tick => g.len += 1,
                _ => self.gaps.push(GapEpisode { start: tick, len: 1 }),
            }
        }
        up
    }

    pub fn gaps(&self) -> &[GapEpisode] {
        &self.gaps
    }

    pub fn ticks(&self) -> u64 {
        self.tick
    }

    /// Sends one frame per tick, in order, and returns the indices that
    /// arrived along with the outage episodes.
    pub fn transmit<T>(spec: ChannelSpec, frames: &[T]) -> (Vec<usize>, Vec<GapEpisode>) {
        let mut ch = LossyChannel::new(spec);
        let delivered = (0..frames.len()).filter(|_| ch.link_up()).collect();
        (delivered, ch.gaps)
    }
}
