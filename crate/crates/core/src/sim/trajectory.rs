//! Constant-speed waypoint flights with an initial hover.

use serde::Serialize;

use crate::error::SceneError;
use crate::key::Point3;

use super::scene::Scene;
use super::sensor::Pose;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectorySpec {
    pub waypoints: Vec<Point3>,
    /// Meters per second.
    pub speed: f64,
    /// Frames held at the first waypoint before moving.
    pub hover_frames: usize,
    /// Total frames; by default the flight ends at the last waypoint.
    pub frames: Option<usize>,
}

impl Default for TrajectorySpec {
    fn default() -> Self {
        Self { waypoints: vec![[1.0, 1.0, 1.0]], speed: 1.0, hover_frames: 0, frames: Some(100) }
    }
}

/// Spacing of the collision check along each leg, meters.
const CHECK_STEP: f64 = 0.02;

fn sub(a: Point3, b: Point3) -> Point3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn norm(a: Point3) -> f64 {
    (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt()
}

/// One pose per frame at `rate` Hz. Yaw follows the direction of travel
/// and holds the first leg's heading while hovering.
pub fn plan_trajectory(scene: &Scene, spec: &TrajectorySpec, rate: f64) -> Result<Vec<Pose>, SceneError> {
    let wp = &spec.waypoints;
    if wp.is_empty() {
        return Err(SceneError::Trajectory("no waypoints".into()));
    }
    if wp.len() > 1 && !(spec.speed > 0.0 && spec.speed.is_finite()) {
        return Err(SceneError::Trajectory(format!("speed {} must be positive", spec.speed)));
    }
    if !(rate > 0.0) {
        return Err(SceneError::Trajectory("sensor rate must be positive".into()));
    }
    for (i, &p) in wp.iter().enumerate() {
        if !scene.bounds.contains(p) {
            return Err(SceneError::Trajectory(format!("waypoint {i} {p:?} outside the scene")));
        }
    }
    let mut legs = Vec::new();
    for (i, w) in wp.windows(2).enumerate() {
        let d = sub(w[1], w[0]);
        let len = norm(d);
        let steps = (len / CHECK_STEP).ceil().max(1.0) as usize;
        for s in 0..=steps {
            let t = s as f64 / steps as f64;
            let p = [w[0][0] + d[0] * t, w[0][1] + d[1] * t, w[0][2] + d[2] * t];
            if scene.inside_obstacle(p) {
                return Err(SceneError::Trajectory(format!("leg {i} passes through an obstacle at {p:?}")));
            }
        }
        legs.push((w[0], d, len));
    }
    if scene.inside_obstacle(wp[0]) {
        return Err(SceneError::Trajectory("first waypoint inside an obstacle".into()));
    }
    let total: f64 = legs.iter().map(|l| l.2).sum();
    let step = if legs.is_empty() { 0.0 } else { spec.speed / rate };
    let moving = if step > 0.0 { (total / step).ceil() as usize + 1 } else { 1 };
    let frames = spec.frames.unwrap_or(spec.hover_frames + moving);
    let heading = |d: Point3| if d[0] == 0.0 && d[1] == 0.0 { 0.0 } else { d[1].atan2(d[0]) };
    let first_yaw = legs.iter().find(|l| l.2 > 0.0).map_or(0.0, |l| heading(l.1));

    let mut poses = Vec::with_capacity(frames);
    for i in 0..frames {
        if i < spec.hover_frames || legs.is_empty() {
            poses.push(Pose { position: wp[0], yaw: first_yaw });
            continue;
        }
        let mut s = ((i - spec.hover_frames) as f64 * step).min(total);
        let mut pose = Pose { position: *wp.last().unwrap(), yaw: first_yaw };
        for &(start, d, len) in &legs {
            if len > 0.0 {
                pose.yaw = heading(d);
            }
            if s <= len {
                let t = if len > 0.0 { s / len } else { 0.0 };
                pose.position = [start[0] + d[0] * t, start[1] + d[1] * t, start[2] + d[2] * t];
                break;
            }
            s -= len;
        }
        poses.push(pose);
    }
    Ok(poses)
}
