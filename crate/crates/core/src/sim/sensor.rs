//! Ray-cast range sensor over a synthetic scene.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::SceneError;
use crate::integrate::SensorFrame;
use crate::key::Point3;

use super::scene::Scene;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SensorSpec {
    pub max_range: f64,
    /// Degrees.
    pub hfov: f64,
    /// Degrees.
    pub vfov: f64,
    /// Hz.
    pub rate: f64,
    pub rays_per_frame: usize,
    /// Degrees, positive tilts the boresight down.
    pub mount_pitch: f64,
}

impl Default for SensorSpec {
    fn default() -> Self {
        Self { max_range: 30.0, hfov: 360.0, vfov: 60.0, rate: 10.0, rays_per_frame: 4000, mount_pitch: 0.0 }
    }
}

impl SensorSpec {
    pub fn validate(&self) -> Result<(), SceneError> {
        let ok = self.hfov > 0.0
            && self.hfov <= 360.0
            && self.vfov > 0.0
            && self.vfov <= 180.0
            && self.rays_per_frame > 0
            && self.rate > 0.0
            && self.max_range > 0.0
            && self.mount_pitch.is_finite();
        if ok {
            Ok(())
        } else {
            Err(SceneError::Infeasible(format!("invalid sensor {self:?}")))
        }
    }
}

/// Sensor position and heading (radians about +z).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Pose {
    pub position: Point3,
    pub yaw: f64,
}

// Plastic number based R2 sequence.
const R2_A1: f64 = 0.754_877_666_246_692_7;
const R2_A2: f64 = 0.569_840_290_998_053_3;

/// One simulated frame. Ray directions follow an R2 low-discrepancy
/// pattern over the field of view, shifted by an offset drawn from
/// `(scene.seed, frame)`, so consecutive frames cover different directions
/// while identical inputs give identical output. Rays without a return
/// within `max_range` yield no point.
pub fn simulate_scan(scene: &Scene, pose: Pose, spec: &SensorSpec, frame: u64) -> SensorFrame {
    let mut rng = ChaCha8Rng::seed_from_u64(scene.seed ^ frame.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    let (du, dv): (f64, f64) = (rng.random(), rng.random());
    let (hfov, vfov) = (spec.hfov.to_radians(), spec.vfov.to_radians());
    let (sp, cp) = spec.mount_pitch.to_radians().sin_cos();
    let (sy, cy) = pose.yaw.sin_cos();
    let o = pose.position;
    let mut points = Vec::with_capacity(spec.rays_per_frame);
    for i in 0..spec.rays_per_frame {
        let n = i as f64;
        let u = (0.5 + R2_A1 * n + du).fract();
        let v = (0.5 + R2_A2 * n + dv).fract();
        let az = (u - 0.5) * hfov;
        let el = (v - 0.5) * vfov;
        // body frame: x forward, y left, z up
        let b = [el.cos() * az.cos(), el.cos() * az.sin(), el.sin()];
        // pitch down about the body y axis, then yaw
        let p = [b[0] * cp + b[2] * sp, b[1], -b[0] * sp + b[2] * cp];
        let d = [p[0] * cy - p[1] * sy, p[0] * sy + p[1] * cy, p[2]];
        if let Some(t) = scene.ray_cast(o, d, spec.max_range) {
            points.push([o[0] + t * d[0], o[1] + t * d[1], o[2] + t * d[2]]);
        }
    }
    SensorFrame::new(frame as f64 / spec.rate, o, points)
}
