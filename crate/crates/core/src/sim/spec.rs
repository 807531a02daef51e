//! Text description of a simulated flight: scene, sensor and trajectory.
//!
//! One `key = value` per line, `#` starts a comment. Values are
//! whitespace-separated numbers or `true`/`false`. `box`, `cylinder` and
//! `keep_out` and `waypoint` may repeat.
//!
//! ```text
//! seed = 7
//! bounds = 0 0 0 24 24 6        # min xyz, max xyz
//! fill = 0.04                   # generated obstacle volume fraction
//! size = 0.4 2                  # footprint range
//! height = 0.5 4
//! cylinder_fraction = 0.5
//! clearance = 0.3
//! ground = true
//! enclosed = false
//! box = 2 2 0 3 3 1             # fixed obstacle, min xyz max xyz
//! cylinder = 5 5 0 0.5 2        # fixed obstacle, cx cy z0 radius height
//! keep_out = 0 0 0 24 2 6       # no generated obstacles here
//! sensor.max_range = 30
//! sensor.hfov = 360
//! sensor.vfov = 60
//! sensor.rate = 10
//! sensor.rays = 4000
//! sensor.pitch = 0              # degrees, positive looks down
//! speed = 0.5
//! hover = 100                   # frames at the first waypoint
//! frames = 200                  # or auto
//! waypoint = 4 4 1.5
//! ```

use std::fmt::Write as _;

use crate::error::SceneError;
use crate::integrate::SensorFrame;

use super::scene::{gen_scene, Aabb, Obstacle, Scene, SceneSpec};
use super::sensor::{simulate_scan, Pose, SensorSpec};
use super::trajectory::{plan_trajectory, TrajectorySpec};

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SimSpec {
    pub scene: SceneSpec,
    pub sensor: SensorSpec,
    pub trajectory: TrajectorySpec,
}

fn nums<const N: usize>(line: usize, v: &str) -> Result<[f64; N], SceneError> {
    let parsed: Result<Vec<f64>, _> = v.split_whitespace().map(str::parse::<f64>).collect();
    let parsed = parsed.map_err(|e| SceneError::Parse { line, msg: e.to_string() })?;
    parsed.try_into().map_err(|p: Vec<f64>| SceneError::Parse {
        line,
        msg: format!("expected {N} numbers, found {}", p.len()),
    })
}

fn flag(line: usize, v: &str) -> Result<bool, SceneError> {
    v.parse().map_err(|_| SceneError::Parse { line, msg: format!("expected true or false, found {v:?}") })
}

impl SimSpec {
    pub fn parse(text: &str) -> Result<Self, SceneError> {
        let mut s = SimSpec::default();
        s.trajectory.waypoints.clear();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let body = raw.split('#').next().unwrap().trim();
            if body.is_empty() {
                continue;
            }
            let (key, v) = body
                .split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| SceneError::Parse { line, msg: "expected key = value".into() })?;
            let one = || nums::<1>(line, v).map(|[x]| x);
            let count = || {
                v.parse::<usize>().map_err(|e| SceneError::Parse { line, msg: e.to_string() })
            };
            match key {
                "seed" => s.scene.seed = v.parse().map_err(|e| SceneError::Parse { line, msg: format!("{e}") })?,
                "bounds" => {
                    let [a, b, c, d, e, f] = nums(line, v)?;
                    s.scene.bounds = Aabb::new([a, b, c], [d, e, f]);
                }
                "fill" => s.scene.fill = one()?,
                "size" => s.scene.size = nums::<2>(line, v).map(|[a, b]| (a, b))?,
                "height" => s.scene.height = nums::<2>(line, v).map(|[a, b]| (a, b))?,
                "cylinder_fraction" => s.scene.cylinder_fraction = one()?,
                "clearance" => s.scene.clearance = one()?,
                "ground" => s.scene.ground = flag(line, v)?,
                "enclosed" => s.scene.enclosed = flag(line, v)?,
                "box" => {
                    let [a, b, c, d, e, f] = nums(line, v)?;
                    s.scene.fixed.push(Obstacle::Box(Aabb::new([a, b, c], [d, e, f])));
                }
                "cylinder" => {
                    let [cx, cy, z0, radius, height] = nums(line, v)?;
                    s.scene.fixed.push(Obstacle::Cylinder { center: [cx, cy], z0, radius, height });
                }
                "keep_out" => {
                    let [a, b, c, d, e, f] = nums(line, v)?;
                    s.scene.keep_out.push(Aabb::new([a, b, c], [d, e, f]));
                }
                "sensor.max_range" => s.sensor.max_range = one()?,
                "sensor.hfov" => s.sensor.hfov = one()?,
                "sensor.vfov" => s.sensor.vfov = one()?,
                "sensor.rate" => s.sensor.rate = one()?,
                "sensor.rays" => s.sensor.rays_per_frame = count()?,
                "sensor.pitch" => s.sensor.mount_pitch = one()?,
                "speed" => s.trajectory.speed = one()?,
                "hover" => s.trajectory.hover_frames = count()?,
                "frames" => s.trajectory.frames = if v == "auto" { None } else { Some(count()?) },
                "waypoint" => s.trajectory.waypoints.push(nums(line, v)?),
                _ => return Err(SceneError::Parse { line, msg: format!("unknown key {key:?}") }),
            }
        }
        if s.trajectory.waypoints.is_empty() {
            s.trajectory.waypoints = TrajectorySpec::default().waypoints;
        }
        Ok(s)
    }

    /// Canonical text form; `parse(to_text())` gives back the same spec.
    pub fn to_text(&self) -> String {
        let j = |v: &[f64]| v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(" ");
        let sc = &self.scene;
        let mut t = String::new();
        let _ = writeln!(t, "seed = {}", sc.seed);
        let _ = writeln!(t, "bounds = {}", j(&[sc.bounds.min, sc.bounds.max].concat()));
        let _ = writeln!(t, "fill = {:?}", sc.fill);
        let _ = writeln!(t, "size = {}", j(&[sc.size.0, sc.size.1]));
        let _ = writeln!(t, "height = {}", j(&[sc.height.0, sc.height.1]));
        let _ = writeln!(t, "cylinder_fraction = {:?}", sc.cylinder_fraction);
        let _ = writeln!(t, "clearance = {:?}", sc.clearance);
        let _ = writeln!(t, "ground = {}", sc.ground);
        let _ = writeln!(t, "enclosed = {}", sc.enclosed);
        for ob in &sc.fixed {
            match *ob {
                Obstacle::Box(b) => {
                    let _ = writeln!(t, "box = {}", j(&[b.min, b.max].concat()));
                }
                Obstacle::Cylinder { center, z0, radius, height } => {
                    let _ = writeln!(t, "cylinder = {}", j(&[center[0], center[1], z0, radius, height]));
                }
            }
        }
        for k in &sc.keep_out {
            let _ = writeln!(t, "keep_out = {}", j(&[k.min, k.max].concat()));
        }
        let se = &self.sensor;
        let _ = writeln!(t, "sensor.max_range = {:?}", se.max_range);
        let _ = writeln!(t, "sensor.hfov = {:?}", se.hfov);
        let _ = writeln!(t, "sensor.vfov = {:?}", se.vfov);
        let _ = writeln!(t, "sensor.rate = {:?}", se.rate);
        let _ = writeln!(t, "sensor.rays = {}", se.rays_per_frame);
        let _ = writeln!(t, "sensor.pitch = {:?}", se.mount_pitch);
        let tr = &self.trajectory;
        let _ = writeln!(t, "speed = {:?}", tr.speed);
        let _ = writeln!(t, "hover = {}", tr.hover_frames);
        match tr.frames {
            Some(n) => {
                let _ = writeln!(t, "frames = {n}");
            }
            None => t.push_str("frames = auto\n"),
        }
        for w in &tr.waypoints {
            let _ = writeln!(t, "waypoint = {}", j(w));
        }
        t
    }

    pub fn build(&self) -> Result<Simulation, SceneError> {
        self.sensor.validate()?;
        let scene = gen_scene(&self.scene)?;
        let poses = plan_trajectory(&scene, &self.trajectory, self.sensor.rate)?;
        Ok(Simulation { scene, sensor: self.sensor.clone(), poses })
    }

    /// Built-in specs: `relay` (hover then slow traverse, 200 frames),
    /// `sparse` (100 x 63 x 12 m park with 5% obstacle volume) and `room`
    /// (small enclosed room).
    pub fn preset(name: &str) -> Option<Self> {
        let text = match name {
            "relay" => RELAY,
            "sparse" => SPARSE,
            "room" => ROOM,
            _ => return None,
        };
        Some(Self::parse(text).expect("built-in spec parses"))
    }
}

const RELAY: &str = "
seed = 11
bounds = 0 0 0 16 16 4
fill = 0.04
size = 0.4 1.5
height = 0.5 3.5
clearance = 0.4
enclosed = true
sensor.max_range = 40
sensor.hfov = 360
sensor.vfov = 60
sensor.rays = 4030
speed = 0.3
hover = 100
frames = 200
waypoint = 2.5 2.5 1.5
waypoint = 5.5 2.5 1.5
";

const SPARSE: &str = "
seed = 3
bounds = 0 0 0 100 63 12
fill = 0.05
size = 1 6
height = 2 12
clearance = 1
ground = true
sensor.max_range = 30
sensor.rays = 4000
speed = 3
hover = 0
frames = auto
keep_out = 0 29.5 0 100 33.5 12
waypoint = 1 31.5 1.5
waypoint = 99 31.5 1.5
";

const ROOM: &str = "
seed = 1
bounds = 0 0 0 8 6 3
fill = 0.03
size = 0.3 1
height = 0.5 2
clearance = 0.3
enclosed = true
sensor.rays = 2000
sensor.vfov = 90
speed = 0.5
hover = 10
frames = 100
keep_out = 0 2.5 0 8 3.5 3
waypoint = 0.5 3 1.2
waypoint = 7.5 3 1.2
";

/// A built scene plus the poses of every frame.
#[derive(Debug, Clone)]
pub struct Simulation {
    pub scene: Scene,
    pub sensor: SensorSpec,
    pub poses: Vec<Pose>,
}

impl Simulation {
    pub fn len(&self) -> usize {
        self.poses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.poses.is_empty()
    }

    pub fn frame(&self, i: usize) -> SensorFrame {
        simulate_scan(&self.scene, self.poses[i], &self.sensor, i as u64)
    }

    pub fn frames(&self) -> impl Iterator<Item = SensorFrame> + '_ {
        (0..self.len()).map(|i| self.frame(i))
    }
}
