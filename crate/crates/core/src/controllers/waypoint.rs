//! Playback of pre-taught motion segments.

use serde::{Deserialize, Serialize};

use super::outcome::{ControllerOutcome, ControllerStatus, Diagnostics};
use crate::error::{Error, Result};
use crate::geometry::Pose;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Waypoint {
    pub pose: Pose,
    /// Segment duration at speed ratio 1, s.
    pub duration_s: f64,
}

/// Piecewise-constant speed ratio over wall time. Each entry `(t, r)` holds
/// from `t` until the next entry; before the first entry the ratio is 1.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SpeedProfile {
    pub segments: Vec<(f64, f64)>,
}

impl SpeedProfile {
    pub fn constant(ratio: f64) -> Self {
        Self {
            segments: vec![(0.0, ratio)],
        }
    }

    /// Full speed except for `[start, start + len)` at `ratio`.
    pub fn interval(start: f64, len: f64, ratio: f64) -> Self {
        Self {
            segments: vec![(0.0, 1.0), (start, ratio), (start + len, 1.0)],
        }
    }

    pub fn ratio_at(&self, t: f64) -> f64 {
        self.segments
            .iter()
            .take_while(|(s, _)| *s <= t)
            .last()
            .map_or(1.0, |(_, r)| *r)
    }

    /// Wall time at which `nominal` seconds of progress have accumulated, or
    /// `None` if the profile stalls forever first.
    pub fn wall_time_for(&self, nominal: f64) -> Option<f64> {
        let mut t = 0.0;
        let mut ratio = 1.0;
        let mut left = nominal;
        for &(start, r) in &self.segments {
            if start > t {
                let span = start - t;
                if ratio * span >= left {
                    return Some(t + left / ratio);
                }
                left -= ratio * span;
                t = start;
            }
            ratio = r;
        }
        if left <= 0.0 {
            Some(t)
        } else if ratio > 0.0 {
            Some(t + left / ratio)
        } else {
            None
        }
    }
}

pub fn validate_waypoints(waypoints: &[Waypoint]) -> Result<()> {
    if waypoints.is_empty() {
        return Err(Error::EmptyInput("waypoints"));
    }
    for (i, w) in waypoints.iter().enumerate() {
        if !(w.duration_s > 0.0 && w.duration_s.is_finite()) {
            return Err(Error::config(format!("waypoints[{i}].duration_s"), "must be > 0"));
        }
    }
    Ok(())
}

/// Deterministic playback; wall time follows the speed profile.
pub fn waypoint_execute(waypoints: &[Waypoint], profile: &SpeedProfile) -> Result<ControllerOutcome> {
    validate_waypoints(waypoints)?;
    let nominal: f64 = waypoints.iter().map(|w| w.duration_s).sum();
    Ok(match profile.wall_time_for(nominal) {
        Some(t) => ControllerOutcome {
            status: ControllerStatus::Succeeded,
            iterations: waypoints.len() as u32,
            elapsed_s: t,
            diagnostics: Diagnostics::default(),
        },
        None => ControllerOutcome {
            status: ControllerStatus::Failed,
            iterations: 0,
            elapsed_s: f64::INFINITY,
            diagnostics: Diagnostics {
                message: Some("stopped indefinitely".into()),
                ..Diagnostics::default()
            },
        },
    })
}
