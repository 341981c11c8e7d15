//! Scripted robot: static fixtures plus link cuboids following periodic
//! keyframe trajectories.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Cuboid, Pose, Vec3};
use crate::safety::{LinkState, RobotSnapshot};

/// Robot links must stay strictly above this height, m.
pub const MIN_LINK_HEIGHT_M: f64 = 0.9;
/// Allowed band for the tool reference point, m.
pub const TOOL_HEIGHT_RANGE_M: (f64, f64) = (0.9, 1.2);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Keyframe {
    pub t_s: f64,
    pub pose: Pose,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkScript {
    pub name: String,
    pub half_extents: Vec3,
    /// Strictly increasing times in `[0, period)`; the motion wraps from the
    /// last keyframe back to the first.
    pub keyframes: Vec<Keyframe>,
    #[serde(default = "default_mass")]
    pub mass_kg: f64,
}

fn default_mass() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ToolScript {
    /// Index of the carrying link.
    pub link: usize,
    /// Tool pose in the link frame.
    pub offset: Pose,
    pub half_extents: Vec3,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobotModel {
    /// Static geometry that belongs to the cell (table, torso).
    pub fixtures: Vec<Cuboid>,
    pub links: Vec<LinkScript>,
    #[serde(default)]
    pub tool: Option<ToolScript>,
    pub period_s: f64,
}

impl LinkScript {
    /// Pose and linear velocity (at speed ratio 1) at trajectory phase `t`.
    pub fn sample(&self, t: f64, period: f64) -> (Pose, Vec3) {
        let kf = &self.keyframes;
        if kf.len() == 1 {
            return (kf[0].pose, Vec3::zeros());
        }
        let t = t.rem_euclid(period);
        let i = match kf.iter().rposition(|k| k.t_s <= t) {
            Some(i) => i,
            None => kf.len() - 1,
        };
        let a = &kf[i];
        let (b, t_b) = if i + 1 < kf.len() {
            (&kf[i + 1], kf[i + 1].t_s)
        } else {
            (&kf[0], kf[0].t_s + period)
        };
        let t_a = if t < a.t_s { a.t_s - period } else { a.t_s };
        let span = t_b - t_a;
        let s = ((t - t_a) / span).clamp(0.0, 1.0);
        let translation = a.pose.translation.lerp(&b.pose.translation, s);
        let rotation = a.pose.rotation.slerp(&b.pose.rotation, s);
        let velocity = (b.pose.translation - a.pose.translation) / span;
        (Pose::new(rotation, translation), velocity)
    }
}

impl RobotModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.period_s > 0.0) {
            return Err(Error::config("robot.period_s", "must be > 0"));
        }
        for (i, l) in self.links.iter().enumerate() {
            let field = format!("robot.links[{i}]");
            if l.keyframes.is_empty() {
                return Err(Error::config(field, "needs at least one keyframe"));
            }
            if l.half_extents.iter().any(|h| !(*h > 0.0)) {
                return Err(Error::config(format!("{field}.half_extents"), "must be > 0"));
            }
            let mut prev = f64::NEG_INFINITY;
            for (k, kf) in l.keyframes.iter().enumerate() {
                if !(kf.t_s > prev && kf.t_s >= 0.0 && kf.t_s < self.period_s) {
                    return Err(Error::config(
                        format!("{field}.keyframes[{k}].t_s"),
                        "keyframe times must increase within [0, period)",
                    ));
                }
                prev = kf.t_s;
            }
            // keyframes plus intermediate samples, since slerp can dip a
            // rotated box below both of its end poses
            let n = 16 * l.keyframes.len();
            let times = (0..n)
                .map(|s| self.period_s * s as f64 / n as f64)
                .chain(l.keyframes.iter().map(|k| k.t_s));
            for t in times {
                let low = Cuboid::new(l.sample(t, self.period_s).0, l.half_extents).aabb().min.z;
                if low <= MIN_LINK_HEIGHT_M {
                    return Err(Error::config(
                        field.clone(),
                        format!("link bottom at {low:.3} m (t = {t:.2} s); links must stay above {MIN_LINK_HEIGHT_M} m"),
                    ));
                }
            }
        }
        if let Some(tool) = &self.tool {
            let link = self
                .links
                .get(tool.link)
                .ok_or_else(|| Error::config("robot.tool.link", "no such link"))?;
            for (k, kf) in link.keyframes.iter().enumerate() {
                let z = kf.pose.compose(&tool.offset).translation.z;
                if !(TOOL_HEIGHT_RANGE_M.0..=TOOL_HEIGHT_RANGE_M.1).contains(&z) {
                    return Err(Error::config(
                        format!("robot.tool at keyframe {k}"),
                        format!("tool height {z:.3} m outside {TOOL_HEIGHT_RANGE_M:?}"),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Geometry and link states at `phase`; `ratio` scales link speeds.
    pub fn snapshot(&self, phase: f64, ratio: f64) -> RobotSnapshot {
        let mut body = self.fixtures.clone();
        let mut links = Vec::with_capacity(self.links.len());
        let mut poses = Vec::with_capacity(self.links.len());
        for l in &self.links {
            let (pose, vel) = l.sample(phase, self.period_s);
            let speed = vel.norm() * ratio;
            body.push(Cuboid::new(pose, l.half_extents));
            links.push(LinkState {
                position: pose.translation,
                speed,
                kinetic_energy: 0.5 * l.mass_kg * speed * speed,
            });
            poses.push(pose);
        }
        let tool = self
            .tool
            .map(|t| Cuboid::new(poses[t.link].compose(&t.offset), t.half_extents));
        RobotSnapshot {
            body,
            tool,
            links,
            joint_state: vec![phase],
        }
    }
}
