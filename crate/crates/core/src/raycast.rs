//! Integer grid traversal along a segment (Amanatides & Woo stepping).

use crate::config::MapConfig;
use crate::key::{pos_to_key, Point3, VoxelKey};

/// Cells crossed by the segment from a world point to the center of a
/// target cell, in order, excluding the target itself.
///
/// When the segment crosses an edge or corner exactly, the tied axes step
/// together, so the walk never visits a cell the segment only touches at a
/// single point.
#[derive(Debug, Clone)]
pub struct GridRay {
    current: [i32; 3],
    target: [i32; 3],
    step: [i32; 3],
    t_max: [f64; 3],
    t_delta: [f64; 3],
    done: bool,
}

impl GridRay {
    pub fn new(from: Point3, target: VoxelKey, cfg: &MapConfig) -> Self {
        let start = pos_to_key(from, cfg).as_array();
        let target = target.as_array();
        let mut step = [0; 3];
        let mut t_max = [f64::INFINITY; 3];
        let mut t_delta = [f64::INFINITY; 3];
        for a in 0..3 {
            let s = (from[a] - cfg.origin[a]) / cfg.res;
            let e = f64::from(target[a]) + 0.5;
            let d = e - s;
            if target[a] != start[a] && d != 0.0 {
                step[a] = if d > 0.0 { 1 } else { -1 };
                let boundary = f64::from(start[a]) + if d > 0.0 { 1.0 } else { 0.0 };
                t_max[a] = (boundary - s) / d;
                t_delta[a] = 1.0 / d.abs();
            }
        }
        Self {
            current: start,
            target,
            step,
            t_max,
            t_delta,
            done: start == target,
        }
    }

    /// Number of cells that will be yielded, upper bound.
    pub fn max_len(&self) -> usize {
        (0..3)
            .map(|a| (i64::from(self.target[a]) - i64::from(self.current[a])).unsigned_abs() as usize)
            .sum()
    }
}

impl Iterator for GridRay {
    type Item = VoxelKey;

    #[inline]
    fn next(&mut self) -> Option<VoxelKey> {
        if self.done {
            return None;
        }
        let out = VoxelKey::from(self.current);
        // Axes already at the target coordinate never step again.
        let mut t = f64::INFINITY;
        for a in 0..3 {
            if self.current[a] != self.target[a] && self.t_max[a] < t {
                t = self.t_max[a];
            }
        }
        if t.is_infinite() {
            // Only reachable through rounding; stop rather than overshoot.
            self.done = true;
            return Some(out);
        }
        for a in 0..3 {
            if self.current[a] != self.target[a] && self.t_max[a] == t {
                self.current[a] += self.step[a];
                self.t_max[a] += self.t_delta[a];
            }
        }
        if self.current == self.target {
            self.done = true;
        }
        Some(out)
    }
}
