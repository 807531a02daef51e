//! Bounded dense-array occupancy grid used as a reference for the hash map.
//!
//! It applies the same per-voxel arithmetic in the same order (entry
//! credit, then hits, then misses, then one clamp) so results can be
//! compared bit for bit. It has no retention, no range limits and no
//! inflation.

use crate::config::MapConfig;
use crate::error::SceneError;
use crate::integrate::SensorFrame;
use crate::key::{pos_to_key, VoxelKey};
use crate::logodds::{state_of, OccState};
use crate::raycast::GridRay;

#[derive(Debug, Clone, Copy, Default)]
struct Cell {
    present: bool,
    l: f64,
    hits: u32,
    misses: u32,
    touched: bool,
}

#[derive(Debug, Clone)]
pub struct DenseReferenceMap {
    cfg: MapConfig,
    min: VoxelKey,
    dims: [usize; 3],
    cells: Vec<Cell>,
}

impl DenseReferenceMap {
    /// Grid covering keys `min ..= max` inclusive.
    pub fn new(cfg: MapConfig, min: VoxelKey, max: VoxelKey) -> Self {
        let dims = [0, 1, 2].map(|a| (max.as_array()[a] - min.as_array()[a] + 1).max(0) as usize);
        Self { cfg, min, dims, cells: vec![Cell::default(); dims[0] * dims[1] * dims[2]] }
    }

    fn index(&self, k: VoxelKey) -> Option<usize> {
        let d = k - self.min;
        let (x, y, z) = (d.ix as usize, d.iy as usize, d.iz as usize);
        if d.ix < 0 || d.iy < 0 || d.iz < 0 || x >= self.dims[0] || y >= self.dims[1] || z >= self.dims[2] {
            return None;
        }
        Some((z * self.dims[1] + y) * self.dims[0] + x)
    }

    fn key_of(&self, i: usize) -> VoxelKey {
        let x = i % self.dims[0];
        let y = (i / self.dims[0]) % self.dims[1];
        let z = i / (self.dims[0] * self.dims[1]);
        self.min + VoxelKey::new(x as i32, y as i32, z as i32)
    }

    pub fn apply(&mut self, frame: &SensorFrame) -> Result<(), SceneError> {
        let mut targets = Vec::new();
        for &p in &frame.points {
            if !p.iter().all(|v| v.is_finite()) {
                continue;
            }
            let k = pos_to_key(p, &self.cfg);
            let i = self.index(k).ok_or(SceneError::OutOfBounds { point: p })?;
            targets.push(k);
            let bonus = self.cfg.logit_init();
            let c = &mut self.cells[i];
            if !c.present {
                c.present = true;
                c.l += bonus;
            }
            c.hits += 1;
            c.touched = true;
        }
        for &k in &targets {
            for cell in GridRay::new(frame.origin, k, &self.cfg) {
                if let Some(i) = self.index(cell) {
                    let c = &mut self.cells[i];
                    if c.present {
                        c.misses += 1;
                        c.touched = true;
                    }
                }
            }
        }
        let cfg = &self.cfg;
        for c in self.cells.iter_mut().filter(|c| c.touched) {
            let delta = f64::from(c.hits) * cfg.l_hit + f64::from(c.misses) * cfg.l_miss;
            c.l = (c.l + delta).clamp(cfg.l_min, cfg.l_max);
            c.hits = 0;
            c.misses = 0;
            c.touched = false;
            if state_of(c.l, cfg) == OccState::Free {
                *c = Cell::default();
            }
        }
        Ok(())
    }

    /// Every tracked voxel as `(key, l, state)`, in key order.
    pub fn voxels(&self) -> Vec<(VoxelKey, f64, OccState)> {
        let mut out: Vec<_> = self
            .cells
            .iter()
            .enumerate()
            .filter(|(_, c)| c.present)
            .map(|(i, c)| (self.key_of(i), c.l, state_of(c.l, &self.cfg)))
            .collect();
        out.sort_by_key(|v| v.0);
        out
    }

    pub fn occupied_keys(&self) -> Vec<VoxelKey> {
        self.voxels().into_iter().filter(|v| v.2 == OccState::Occ).map(|v| v.0).collect()
    }
}

/// Runs `frames` through a fresh reference grid.
pub fn dense_reference_map<'a>(
    frames: impl IntoIterator<Item = &'a SensorFrame>,
    cfg: &MapConfig,
    min: VoxelKey,
    max: VoxelKey,
) -> Result<DenseReferenceMap, SceneError> {
    let mut m = DenseReferenceMap::new(cfg.clone(), min, max);
    for f in frames {
        m.apply(f)?;
    }
    Ok(m)
}
