//! Grid indexing: world positions to voxel keys and back.

use std::fmt;
use std::hash::{BuildHasherDefault, Hash, Hasher};
use std::ops::{Add, Sub};

use serde::{Deserialize, Serialize};

use crate::config::MapConfig;

/// World-frame position in meters.
pub type Point3 = [f64; 3];

/// Integer index of a voxel cell: `floor((p - origin) / res)` per axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Default, Serialize, Deserialize)]
pub struct VoxelKey {
    pub ix: i32,
    pub iy: i32,
    pub iz: i32,
}

impl VoxelKey {
    pub const ZERO: VoxelKey = VoxelKey::new(0, 0, 0);

    pub const fn new(ix: i32, iy: i32, iz: i32) -> Self {
        Self { ix, iy, iz }
    }

    pub fn as_array(self) -> [i32; 3] {
        [self.ix, self.iy, self.iz]
    }

    /// Squared length in voxel units.
    pub fn norm_sq(self) -> i64 {
        let [x, y, z] = self.as_array().map(i64::from);
        x * x + y * y + z * z
    }

    /// Three-prime multiply-xor mix of the components.
    #[inline]
    pub fn spatial_hash(self) -> u64 {
        (self.ix as u32 as u64).wrapping_mul(73_856_093)
            ^ (self.iy as u32 as u64).wrapping_mul(19_349_663)
            ^ (self.iz as u32 as u64).wrapping_mul(83_492_791)
    }
}

impl Hash for VoxelKey {
    #[inline]
    fn hash<H: Hasher>(&self, state: &mut H) {
        state.write_u64(self.spatial_hash());
    }
}

impl Add for VoxelKey {
    type Output = VoxelKey;

    fn add(self, rhs: VoxelKey) -> VoxelKey {
        VoxelKey::new(self.ix + rhs.ix, self.iy + rhs.iy, self.iz + rhs.iz)
    }
}

impl Sub for VoxelKey {
    type Output = VoxelKey;

    fn sub(self, rhs: VoxelKey) -> VoxelKey {
        VoxelKey::new(self.ix - rhs.ix, self.iy - rhs.iy, self.iz - rhs.iz)
    }
}

impl From<[i32; 3]> for VoxelKey {
    fn from([ix, iy, iz]: [i32; 3]) -> Self {
        Self { ix, iy, iz }
    }
}

impl fmt::Display for VoxelKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.ix, self.iy, self.iz)
    }
}

/// Hasher for [`VoxelKey`] maps. The key already feeds a mixed 64-bit word,
/// so this only needs a final avalanche to spread entropy into the high bits.
#[derive(Default, Clone, Copy)]
pub struct KeyHasher(u64);

impl Hasher for KeyHasher {
    #[inline]
    fn finish(&self) -> u64 {
        let h = self.0.wrapping_mul(0x9E37_79B9_7F4A_7C15);
        h ^ (h >> 29)
    }

    #[inline]
    fn write(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.0 = (self.0 ^ u64::from(b)).wrapping_mul(0x100_0000_01B3);
        }
    }

    #[inline]
    fn write_u64(&mut self, v: u64) {
        self.0 ^= v;
    }
}

pub type KeyBuildHasher = BuildHasherDefault<KeyHasher>;
pub type KeyMap<V> = std::collections::HashMap<VoxelKey, V, KeyBuildHasher>;

/// Position to key, `floor((p - o) / res)`.
#[inline]
pub fn pos_to_key(p: Point3, cfg: &MapConfig) -> VoxelKey {
    pos_to_key_raw(p, cfg.origin, cfg.res)
}

#[inline]
pub(crate) fn pos_to_key_raw(p: Point3, origin: Point3, res: f64) -> VoxelKey {
    VoxelKey::new(
        ((p[0] - origin[0]) / res).floor() as i32,
        ((p[1] - origin[1]) / res).floor() as i32,
        ((p[2] - origin[2]) / res).floor() as i32,
    )
}

/// Center of the voxel cell, `o + (k + 0.5) * res`.
#[inline]
pub fn key_to_center(k: VoxelKey, cfg: &MapConfig) -> Point3 {
    let o = cfg.origin;
    let r = cfg.res;
    [
        o[0] + (f64::from(k.ix) + 0.5) * r,
        o[1] + (f64::from(k.iy) + 0.5) * r,
        o[2] + (f64::from(k.iz) + 0.5) * r,
    ]
}

pub(crate) fn distance(a: Point3, b: Point3) -> f64 {
    let d = [a[0] - b[0], a[1] - b[1], a[2] - b[2]];
    (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt()
}

pub(crate) fn is_finite(p: Point3) -> bool {
    p.iter().all(|c| c.is_finite())
}
