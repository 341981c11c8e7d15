//! Speed and separation monitoring with per-link protective spheres.

use serde::{Deserialize, Serialize};

use super::grid::{GridSpec, VoxelSet};
use super::zones::{SafetyDecision, SpeedMode, ZoneMask};
use crate::error::{Error, Result};
use crate::geometry::{Aabb, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SsmParams {
    /// Human approach speed, m/s.
    pub v_h: f64,
    /// System reaction time, s.
    pub t_r: f64,
    /// Robot stopping time, s.
    pub t_s: f64,
    /// Braking distance, m.
    pub b: f64,
    /// Intrusion distance, m.
    pub c: f64,
    /// Robot position uncertainty, m.
    pub z_r: f64,
    /// Sensor position uncertainty, m.
    pub z_s: f64,
    /// Monitoring cycle, s.
    pub cycle_dt: f64,
}

impl Default for SsmParams {
    fn default() -> Self {
        Self {
            v_h: 2.0,
            t_r: 0.1,
            t_s: 0.01,
            b: 0.005,
            c: 0.21,
            z_r: 0.001,
            z_s: 0.05,
            cycle_dt: 0.1,
        }
    }
}

impl SsmParams {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("v_h", self.v_h),
            ("t_r", self.t_r),
            ("t_s", self.t_s),
            ("b", self.b),
            ("c", self.c),
            ("z_r", self.z_r),
            ("z_s", self.z_s),
            ("cycle_dt", self.cycle_dt),
        ];
        for (name, v) in fields {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::config(format!("ssm.{name}"), "must be finite and >= 0"));
            }
        }
        Ok(())
    }
}

/// S = v_h (t_r + t_s) + v_r t_r + b + C + z_r + z_s
pub fn protective_distance(p: &SsmParams, v_r: f64) -> f64 {
    p.v_h * (p.t_r + p.t_s) + v_r * p.t_r + p.b + p.c + p.z_r + p.z_s
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkState {
    pub position: Vec3,
    /// Magnitude of the reference point's Cartesian velocity, m/s.
    pub speed: f64,
    /// Operational-space kinetic energy, J.
    pub kinetic_energy: f64,
}

impl LinkState {
    pub fn at_rest(position: Vec3) -> Self {
        Self {
            position,
            speed: 0.0,
            kinetic_energy: 0.0,
        }
    }
}

/// Stop if any predicted voxel center lies inside any link's protective
/// sphere; otherwise the fixed slowdown zone decides.
///
/// `stop_ratio` is the occupied fraction of the voxels inside the union of
/// spheres. Unlike the fixed stop zone, a single voxel suffices to stop.
pub fn dynamic_zone_decide(
    links: &[LinkState],
    p: &SsmParams,
    predicted: &VoxelSet,
    spec: &GridSpec,
    slowdown: &ZoneMask,
    threshold: f64,
) -> SafetyDecision {
    let spheres: Vec<(Vec3, f64)> = links
        .iter()
        .map(|l| (l.position, protective_distance(p, l.speed)))
        .collect();
    let in_any = |c: &Vec3| {
        spheres
            .iter()
            .any(|(o, r)| (c - o).norm_squared() <= r * r)
    };

    let hits = predicted
        .iter()
        .filter(|&i| in_any(&spec.center(i)))
        .count();

    let stop_ratio = if hits == 0 {
        0.0
    } else {
        let covered = sphere_union_voxels(&spheres, spec);
        if covered == 0 {
            0.0
        } else {
            hits as f64 / covered as f64
        }
    };
    let slowdown_ratio = slowdown.ratio(predicted);
    let mode = if hits > 0 {
        SpeedMode::Stop
    } else if slowdown_ratio > threshold {
        SpeedMode::Slowdown
    } else {
        SpeedMode::Normal
    };
    SafetyDecision {
        stop_ratio,
        slowdown_ratio,
        mode,
    }
}

fn sphere_union_voxels(spheres: &[(Vec3, f64)], spec: &GridSpec) -> usize {
    let mut mark = vec![false; spec.voxel_count()];
    let mut count = 0;
    for (o, r) in spheres {
        let b = Aabb {
            min: o - Vec3::repeat(*r),
            max: o + Vec3::repeat(*r),
        };
        let Some(bounds) = spec.index_bounds(&b) else {
            continue;
        };
        for i in bounds[0].0..=bounds[0].1 {
            for j in bounds[1].0..=bounds[1].1 {
                for k in bounds[2].0..=bounds[2].1 {
                    let idx = spec.linear([i, j, k]);
                    if !mark[idx] && (spec.center(idx) - o).norm_squared() <= r * r {
                        mark[idx] = true;
                        count += 1;
                    }
                }
            }
        }
    }
    count
}
