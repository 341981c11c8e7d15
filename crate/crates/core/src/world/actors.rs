//! Scripted workers and obstacles: everything the monitor should treat as
//! external.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Cuboid, Vec3};
use crate::seed::mix;

/// Time between successive visits of a worker.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Spacing {
    Fixed { s: f64 },
    Uniform { lo: f64, hi: f64 },
}

impl Spacing {
    pub fn min(&self) -> f64 {
        match *self {
            Spacing::Fixed { s } => s,
            Spacing::Uniform { lo, .. } => lo,
        }
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        match *self {
            Spacing::Fixed { s } => s,
            Spacing::Uniform { lo, hi } if hi > lo => rng.random_range(lo..=hi),
            Spacing::Uniform { lo, .. } => lo,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathPoint {
    /// Time since the start of the visit, s.
    pub t_s: f64,
    pub center: Vec3,
}

/// A worker-sized box that repeatedly walks the same path. Outside a visit
/// the worker is absent from the cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkerScript {
    pub name: String,
    pub half_extents: Vec3,
    pub path: Vec<PathPoint>,
    pub first_visit_s: f64,
    pub spacing: Spacing,
    #[serde(default)]
    pub max_visits: Option<u32>,
}

impl WorkerScript {
    pub fn validate(&self, index: usize) -> Result<()> {
        let field = |f: &str| format!("workers[{index}].{f}");
        if self.path.is_empty() {
            return Err(Error::config(field("path"), "must not be empty"));
        }
        if self.half_extents.iter().any(|h| !(*h > 0.0)) {
            return Err(Error::config(field("half_extents"), "must be > 0"));
        }
        if self.path[0].t_s != 0.0 {
            return Err(Error::config(field("path[0].t_s"), "visits start at t = 0"));
        }
        for w in self.path.windows(2) {
            if !(w[1].t_s > w[0].t_s) {
                return Err(Error::config(field("path"), "times must increase"));
            }
        }
        let min = self.spacing.min();
        if !(min > 0.0) {
            return Err(Error::config(field("spacing"), "period must be > 0"));
        }
        if let Spacing::Uniform { lo, hi } = self.spacing {
            if !(hi >= lo) {
                return Err(Error::config(field("spacing"), "need lo <= hi"));
            }
        }
        if self.visit_length() >= min {
            return Err(Error::config(field("spacing"), "visits would overlap"));
        }
        if !(self.first_visit_s >= 0.0) {
            return Err(Error::config(field("first_visit_s"), "must be >= 0"));
        }
        Ok(())
    }

    pub fn visit_length(&self) -> f64 {
        self.path.last().map_or(0.0, |p| p.t_s)
    }

    /// Center at time `t` into a visit, or `None` once the visit is over.
    pub fn center_at(&self, t: f64) -> Option<Vec3> {
        if t < 0.0 || t > self.visit_length() {
            return None;
        }
        let i = self.path.iter().rposition(|p| p.t_s <= t)?;
        let a = &self.path[i];
        Some(match self.path.get(i + 1) {
            Some(b) => a.center.lerp(&b.center, (t - a.t_s) / (b.t_s - a.t_s)),
            None => a.center,
        })
    }

    pub fn top_z(&self) -> f64 {
        self.path
            .iter()
            .map(|p| p.center.z + self.half_extents.z)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Visit start times of one worker, drawn lazily from its own stream.
#[derive(Debug, Clone)]
pub struct VisitSchedule {
    rng: ChaCha8Rng,
    starts: Vec<f64>,
    spacing: Spacing,
    max_visits: Option<u32>,
}

impl VisitSchedule {
    pub fn new(script: &WorkerScript, seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            starts: vec![script.first_visit_s],
            spacing: script.spacing,
            max_visits: script.max_visits,
        }
    }

    fn extend_to(&mut self, t: f64) {
        while *self.starts.last().unwrap() <= t {
            if self.max_visits.is_some_and(|m| self.starts.len() >= m as usize) {
                break;
            }
            let next = self.starts.last().unwrap() + self.spacing.sample(&mut self.rng);
            self.starts.push(next);
        }
    }

    /// Start of the latest visit at or before `t`.
    pub fn visit_start(&mut self, t: f64) -> Option<f64> {
        if self.max_visits == Some(0) {
            return None;
        }
        self.extend_to(t);
        let i = self.starts.partition_point(|s| *s <= t);
        (i > 0).then(|| self.starts[i - 1])
    }

    pub fn starts_until(&mut self, t: f64) -> Vec<f64> {
        if self.max_visits == Some(0) {
            return Vec::new();
        }
        self.extend_to(t);
        self.starts.iter().copied().take_while(|s| *s <= t).collect()
    }
}

/// Sampling ranges for random obstacle boxes: full edge lengths and center
/// positions, m.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObstacleRanges {
    pub size: [(f64, f64); 3],
    pub position: [(f64, f64); 3],
}

impl Default for ObstacleRanges {
    fn default() -> Self {
        Self {
            size: [(0.3, 0.5), (0.03, 0.35), (0.03, 0.35)],
            position: [(-0.65, 0.45), (-1.45, 1.1), (0.0, 1.85)],
        }
    }
}

impl ObstacleRanges {
    pub fn validate(&self) -> Result<()> {
        for (k, (lo, hi)) in self.size.iter().enumerate() {
            if !(*lo > 0.0 && hi >= lo) {
                return Err(Error::config(format!("obstacles.ranges.size[{k}]"), "need 0 < lo <= hi"));
            }
        }
        for (k, (lo, hi)) in self.position.iter().enumerate() {
            if !(hi >= lo) {
                return Err(Error::config(format!("obstacles.ranges.position[{k}]"), "need lo <= hi"));
            }
        }
        Ok(())
    }
}

fn uniform<R: Rng>(rng: &mut R, (lo, hi): (f64, f64)) -> f64 {
    if hi > lo {
        rng.random_range(lo..=hi)
    } else {
        lo
    }
}

/// Axis-aligned box with size and center drawn uniformly from `spec`.
pub fn spawn_random_obstacle(spec: &ObstacleRanges, seed: u64) -> Cuboid {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let size = Vec3::new(
        uniform(&mut rng, spec.size[0]),
        uniform(&mut rng, spec.size[1]),
        uniform(&mut rng, spec.size[2]),
    );
    let center = Vec3::new(
        uniform(&mut rng, spec.position[0]),
        uniform(&mut rng, spec.position[1]),
        uniform(&mut rng, spec.position[2]),
    );
    Cuboid::axis_aligned(center, size / 2.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObstacleScript {
    pub appear_s: f64,
    pub disappear_s: f64,
    /// Fixed box; `None` draws one from the scenario ranges.
    #[serde(default)]
    pub cuboid: Option<Cuboid>,
    #[serde(default)]
    pub velocity_mps: Vec3,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ObstacleConfig {
    #[serde(default)]
    pub ranges: ObstacleRanges,
    #[serde(default)]
    pub scripts: Vec<ObstacleScript>,
}

impl ObstacleConfig {
    pub fn validate(&self) -> Result<()> {
        self.ranges.validate()?;
        for (i, s) in self.scripts.iter().enumerate() {
            if !(s.disappear_s > s.appear_s && s.appear_s >= 0.0) {
                return Err(Error::config(
                    format!("obstacles.scripts[{i}]"),
                    "need 0 <= appear_s < disappear_s",
                ));
            }
        }
        Ok(())
    }

    /// Resolves random boxes once per run.
    pub fn resolve(&self, seed: u64) -> Vec<(ObstacleScript, Cuboid)> {
        self.scripts
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let c = s
                    .cuboid
                    .unwrap_or_else(|| spawn_random_obstacle(&self.ranges, mix(seed, i as u64)));
                (*s, c)
            })
            .collect()
    }
}

/// Obstacle box at time `t`, if present.
pub fn obstacle_at(script: &ObstacleScript, base: &Cuboid, t: f64) -> Option<Cuboid> {
    if t < script.appear_s || t >= script.disappear_s {
        return None;
    }
    let mut c = *base;
    c.pose.translation += script.velocity_mps * (t - script.appear_s);
    Some(c)
}
