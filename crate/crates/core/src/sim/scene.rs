//! Static synthetic scenes of boxes and vertical cylinders.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::SceneError;
use crate::key::Point3;

/// Axis-aligned box, meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Aabb {
    pub min: Point3,
    pub max: Point3,
}

impl Aabb {
    pub const fn new(min: Point3, max: Point3) -> Self {
        Self { min, max }
    }

    pub fn size(&self) -> Point3 {
        [self.max[0] - self.min[0], self.max[1] - self.min[1], self.max[2] - self.min[2]]
    }

    pub fn volume(&self) -> f64 {
        let s = self.size();
        s[0] * s[1] * s[2]
    }

    pub fn is_valid(&self) -> bool {
        (0..3).all(|a| self.min[a].is_finite() && self.max[a].is_finite() && self.min[a] < self.max[a])
    }

    /// Closed containment.
    pub fn contains(&self, p: Point3) -> bool {
        (0..3).all(|a| p[a] >= self.min[a] && p[a] <= self.max[a])
    }

    pub fn contains_box(&self, other: &Aabb) -> bool {
        self.contains(other.min) && self.contains(other.max)
    }

    /// Whether the boxes come closer than `gap` on every axis.
    pub fn near(&self, other: &Aabb, gap: f64) -> bool {
        (0..3).all(|a| self.min[a] < other.max[a] + gap && other.min[a] < self.max[a] + gap)
    }

    /// Entry and exit parameters of the ray `o + t d`, if it meets the box.
    pub fn ray_span(&self, o: Point3, d: Point3) -> Option<(f64, f64)> {
        let (mut t0, mut t1) = (f64::NEG_INFINITY, f64::INFINITY);
        for a in 0..3 {
            if d[a] == 0.0 {
                if o[a] < self.min[a] || o[a] > self.max[a] {
                    return None;
                }
                continue;
            }
            let inv = 1.0 / d[a];
            let (mut lo, mut hi) = ((self.min[a] - o[a]) * inv, (self.max[a] - o[a]) * inv);
            if lo > hi {
                std::mem::swap(&mut lo, &mut hi);
            }
            t0 = t0.max(lo);
            t1 = t1.min(hi);
        }
        (t0 <= t1).then_some((t0, t1))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Obstacle {
    Box(Aabb),
    /// Upright cylinder standing on `z0`.
    Cylinder { center: [f64; 2], z0: f64, radius: f64, height: f64 },
}

impl Obstacle {
    pub fn bbox(&self) -> Aabb {
        match *self {
            Obstacle::Box(b) => b,
            Obstacle::Cylinder { center, z0, radius, height } => Aabb::new(
                [center[0] - radius, center[1] - radius, z0],
                [center[0] + radius, center[1] + radius, z0 + height],
            ),
        }
    }

    pub fn volume(&self) -> f64 {
        match *self {
            Obstacle::Box(b) => b.volume(),
            Obstacle::Cylinder { radius, height, .. } => std::f64::consts::PI * radius * radius * height,
        }
    }

    pub fn contains(&self, p: Point3) -> bool {
        match *self {
            Obstacle::Box(b) => b.contains(p),
            Obstacle::Cylinder { center, z0, radius, height } => {
                let (dx, dy) = (p[0] - center[0], p[1] - center[1]);
                p[2] >= z0 && p[2] <= z0 + height && dx * dx + dy * dy <= radius * radius
            }
        }
    }

    /// Smallest `t >= 0` where the ray enters the solid. Rays starting
    /// inside report nothing.
    pub fn ray_hit(&self, o: Point3, d: Point3) -> Option<f64> {
        match *self {
            Obstacle::Box(b) => {
                let (t0, t1) = b.ray_span(o, d)?;
                (t0 >= 0.0 && t1 >= t0).then_some(t0)
            }
            Obstacle::Cylinder { center, z0, radius, height } => {
                if self.contains(o) {
                    return None;
                }
                let z1 = z0 + height;
                let (ox, oy) = (o[0] - center[0], o[1] - center[1]);
                let mut best = f64::INFINITY;
                // side wall
                let a = d[0] * d[0] + d[1] * d[1];
                if a > 0.0 {
                    let b = ox * d[0] + oy * d[1];
                    let c = ox * ox + oy * oy - radius * radius;
                    let disc = b * b - a * c;
                    if disc >= 0.0 {
                        let t = (-b - disc.sqrt()) / a;
                        let z = o[2] + t * d[2];
                        if t >= 0.0 && z >= z0 && z <= z1 {
                            best = t;
                        }
                    }
                }
                // caps
                if d[2] != 0.0 {
                    for zc in [z0, z1] {
                        let t = (zc - o[2]) / d[2];
                        if t >= 0.0 && t < best {
                            let (x, y) = (ox + t * d[0], oy + t * d[1]);
                            if x * x + y * y <= radius * radius {
                                best = t;
                            }
                        }
                    }
                }
                best.is_finite().then_some(best)
            }
        }
    }
}

/// A static world. `ground` adds a floor at `bounds.min.z`; `enclosed`
/// makes every face of `bounds` a wall.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Scene {
    pub bounds: Aabb,
    pub obstacles: Vec<Obstacle>,
    pub ground: bool,
    pub enclosed: bool,
    pub seed: u64,
}

impl Scene {
    pub fn empty(bounds: Aabb) -> Self {
        Self { bounds, obstacles: Vec::new(), ground: false, enclosed: false, seed: 0 }
    }

    pub fn inside_obstacle(&self, p: Point3) -> bool {
        self.obstacles.iter().any(|o| o.contains(p))
    }

    /// Distance along the unit direction `d` to the first surface, if
    /// within `max_range`.
    pub fn ray_cast(&self, o: Point3, d: Point3, max_range: f64) -> Option<f64> {
        let mut best = f64::INFINITY;
        for ob in &self.obstacles {
            if let Some(t) = ob.ray_hit(o, d) {
                best = best.min(t);
            }
        }
        if self.enclosed {
            for a in 0..3 {
                let t = if d[a] > 0.0 {
                    (self.bounds.max[a] - o[a]) / d[a]
                } else if d[a] < 0.0 {
                    (self.bounds.min[a] - o[a]) / d[a]
                } else {
                    continue;
                };
                if t >= 0.0 {
                    best = best.min(t);
                }
            }
        } else if self.ground && d[2] < 0.0 {
            let t = (self.bounds.min[2] - o[2]) / d[2];
            if t >= 0.0 {
                best = best.min(t);
            }
        }
        (best <= max_range).then_some(best)
    }

    /// Fraction of `res`-sized cells of the bounds whose centers lie inside
    /// an obstacle.
    pub fn fill_fraction(&self, res: f64) -> f64 {
        let dims: Vec<i64> = self.bounds.size().iter().map(|s| (s / res).round().max(1.0) as i64).collect();
        let total = (dims[0] * dims[1] * dims[2]) as f64;
        let cell = |a: usize, v: f64| (v - self.bounds.min[a]) / res - 0.5;
        let mut filled = 0u64;
        for ob in &self.obstacles {
            let bb = ob.bbox();
            let lo: Vec<i64> = (0..3).map(|a| (cell(a, bb.min[a]).ceil() as i64).max(0)).collect();
            let hi: Vec<i64> = (0..3).map(|a| (cell(a, bb.max[a]).floor() as i64).min(dims[a] - 1)).collect();
            for z in lo[2]..=hi[2] {
                for y in lo[1]..=hi[1] {
                    for x in lo[0]..=hi[0] {
                        let p = [x, y, z].map(|i| i as f64);
                        let c = [0, 1, 2].map(|a| self.bounds.min[a] + (p[a] + 0.5) * res);
                        if ob.contains(c) {
                            filled += 1;
                        }
                    }
                }
            }
        }
        filled as f64 / total
    }
}

/// Parameters of random scene generation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SceneSpec {
    pub bounds: Aabb,
    /// Target fraction of the bounds volume covered by generated obstacles.
    pub fill: f64,
    /// Footprint edge (boxes) or diameter (cylinders) range, meters.
    pub size: (f64, f64),
    pub height: (f64, f64),
    pub cylinder_fraction: f64,
    /// Minimum gap between generated obstacles.
    pub clearance: f64,
    pub ground: bool,
    pub enclosed: bool,
    pub seed: u64,
    /// Obstacles placed verbatim before generation.
    pub fixed: Vec<Obstacle>,
    /// Regions generated obstacles stay out of, such as a flight corridor.
    pub keep_out: Vec<Aabb>,
}

impl Default for SceneSpec {
    fn default() -> Self {
        Self {
            bounds: Aabb::new([0.0, 0.0, 0.0], [20.0, 20.0, 5.0]),
            fill: 0.0,
            size: (0.4, 2.0),
            height: (0.5, 4.0),
            cylinder_fraction: 0.5,
            clearance: 0.3,
            ground: false,
            enclosed: false,
            seed: 0,
            fixed: Vec::new(),
            keep_out: Vec::new(),
        }
    }
}

const MAX_FAILED_PLACEMENTS: usize = 2000;

/// Places non-overlapping obstacles standing on the floor until their
/// volume reaches `fill` of the bounds. The last obstacle is cut down in
/// height so the total does not overshoot.
pub fn gen_scene(spec: &SceneSpec) -> Result<Scene, SceneError> {
    let b = spec.bounds;
    if !b.is_valid() {
        return Err(SceneError::Infeasible("bounds must have positive extent".into()));
    }
    if !(0.0..=0.5).contains(&spec.fill) {
        return Err(SceneError::Infeasible(format!("fill {} outside [0, 0.5]", spec.fill)));
    }
    let (s0, s1) = spec.size;
    let (h0, h1) = spec.height;
    if spec.fill > 0.0 && !(s0 > 0.0 && s0 <= s1 && h0 > 0.0 && h0 <= h1) {
        return Err(SceneError::Infeasible("obstacle size and height ranges must be positive and ordered".into()));
    }
    let ext = b.size();
    if spec.fill > 0.0 && (s0 > ext[0].min(ext[1]) || h0 > ext[2]) {
        return Err(SceneError::Infeasible("smallest obstacle does not fit the bounds".into()));
    }
    for ob in &spec.fixed {
        if !b.contains_box(&ob.bbox()) {
            return Err(SceneError::Infeasible(format!("obstacle {ob:?} outside the bounds")));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut obstacles = spec.fixed.clone();
    let target = spec.fill * b.volume();
    let mut placed: f64 = 0.0;
    let mut failures = 0;
    let floor = b.min[2];
    while target - placed > 1e-9 {
        if failures >= MAX_FAILED_PLACEMENTS {
            return Err(SceneError::Infeasible(format!(
                "reached {:.2}% of the requested {:.2}% fill",
                100.0 * placed / b.volume(),
                100.0 * spec.fill
            )));
        }
        let cylinder = rng.random::<f64>() < spec.cylinder_fraction;
        let w = rng.random_range(s0..=s1);
        let dpt = if cylinder { w } else { rng.random_range(s0..=s1) };
        let mut h = rng.random_range(h0..=h1.min(ext[2]));
        let area = if cylinder { std::f64::consts::PI * w * w / 4.0 } else { w * dpt };
        if placed + area * h > target {
            h = (target - placed) / area;
        }
        let x = b.min[0] + rng.random::<f64>() * (ext[0] - w);
        let y = b.min[1] + rng.random::<f64>() * (ext[1] - dpt);
        let ob = if cylinder {
            Obstacle::Cylinder { center: [x + w / 2.0, y + w / 2.0], z0: floor, radius: w / 2.0, height: h }
        } else {
            Obstacle::Box(Aabb::new([x, y, floor], [x + w, y + dpt, floor + h]))
        };
        let bb = ob.bbox();
        if obstacles.iter().any(|o| o.bbox().near(&bb, spec.clearance))
            || spec.keep_out.iter().any(|k| k.near(&bb, 0.0))
        {
            failures += 1;
            continue;
        }
        failures = 0;
        placed += ob.volume();
        obstacles.push(ob);
    }
    Ok(Scene { bounds: b, obstacles, ground: spec.ground, enclosed: spec.enclosed, seed: spec.seed })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cube(side: f64, fill: f64, seed: u64) -> SceneSpec {
        SceneSpec {
            bounds: Aabb::new([0.0; 3], [side; 3]),
            fill,
            size: (0.2, 0.8),
            height: (0.3, side),
            clearance: 0.1,
            seed,
            ..SceneSpec::default()
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let spec = cube(3.2, 0.05, 9);
        assert_eq!(gen_scene(&spec).unwrap(), gen_scene(&spec).unwrap());
        assert_ne!(gen_scene(&spec).unwrap(), gen_scene(&cube(3.2, 0.05, 10)).unwrap());
    }

    #[test]
    fn zero_fill_is_empty() {
        assert!(gen_scene(&cube(3.2, 0.0, 1)).unwrap().obstacles.is_empty());
    }

    #[test]
    fn fill_fraction_matches_target() {
        // A 3.2 m cube holds 32^3 voxels at 0.1 m.
        for seed in 0..10 {
            let scene = gen_scene(&cube(3.2, 0.05, seed)).unwrap();
            let voxelized = scene.fill_fraction(0.1);
            assert!((0.04..=0.06).contains(&voxelized), "seed {seed}: {voxelized}");
            // independent Monte-Carlo volume estimate
            let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
            let n = 200_000;
            let inside = (0..n)
                .filter(|_| scene.inside_obstacle([0, 1, 2].map(|_| rng.random::<f64>() * 3.2)))
                .count();
            let mc = inside as f64 / n as f64;
            assert!((0.04..=0.06).contains(&mc), "seed {seed}: monte carlo {mc}");
        }
    }

    #[test]
    fn infeasible_density_is_rejected() {
        assert!(matches!(gen_scene(&cube(3.2, 0.9, 1)), Err(SceneError::Infeasible(_))));
        let crowded = SceneSpec { clearance: 1.0, ..cube(3.2, 0.4, 1) };
        assert!(matches!(gen_scene(&crowded), Err(SceneError::Infeasible(_))));
    }

    #[test]
    fn analytic_hits() {
        let wall = Obstacle::Box(Aabb::new([5.0, -10.0, -10.0], [6.0, 10.0, 10.0]));
        let scene = Scene { obstacles: vec![wall], ..Scene::empty(Aabb::new([-20.0; 3], [20.0; 3])) };
        assert_eq!(scene.ray_cast([0.0; 3], [1.0, 0.0, 0.0], 30.0), Some(5.0));
        assert_eq!(scene.ray_cast([0.0; 3], [-1.0, 0.0, 0.0], 30.0), None);
        assert_eq!(scene.ray_cast([0.0; 3], [1.0, 0.0, 0.0], 4.0), None);

        let cyl = Obstacle::Cylinder { center: [3.0, 0.0], z0: 0.0, radius: 1.0, height: 2.0 };
        assert_eq!(cyl.ray_hit([0.0, 0.0, 1.0], [1.0, 0.0, 0.0]), Some(2.0));
        assert_eq!(cyl.ray_hit([3.0, 0.0, 5.0], [0.0, 0.0, -1.0]), Some(3.0));
        assert_eq!(cyl.ray_hit([0.0, 0.0, 3.0], [1.0, 0.0, 0.0]), None);
    }
}
