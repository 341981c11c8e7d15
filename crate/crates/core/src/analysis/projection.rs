use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Human,
    RobotAlone,
    RobotBetweenHumans,
}

/// Repeating work/break pattern; the unit in progress pauses over a break.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BreakSchedule {
    pub work_s: f64,
    pub break_s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimingModel {
    pub kind: ModelKind,
    pub takt_s: f64,
    #[serde(default)]
    pub breaks: Option<BreakSchedule>,
}

pub const HUMAN_TAKT_S: f64 = 141.0;
pub const ROBOT_TAKT_S: f64 = 159.0;
/// Shift takt of the robot with workers sharing the cell: 18 600 s / 108.
pub const EFFECTIVE_TAKT_S: f64 = 18_600.0 / 108.0;

impl TimingModel {
    pub fn human() -> Self {
        Self {
            kind: ModelKind::Human,
            takt_s: HUMAN_TAKT_S,
            breaks: Some(BreakSchedule {
                work_s: 3000.0,
                break_s: 600.0,
            }),
        }
    }

    pub fn robot_alone() -> Self {
        Self {
            kind: ModelKind::RobotAlone,
            takt_s: ROBOT_TAKT_S,
            breaks: None,
        }
    }

    pub fn robot_between_humans(takt_s: f64) -> Self {
        Self {
            kind: ModelKind::RobotBetweenHumans,
            takt_s,
            breaks: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.takt_s > 0.0 && self.takt_s.is_finite()) {
            return Err(Error::config("takt_s", "must be > 0"));
        }
        if let Some(b) = self.breaks {
            if !(b.work_s > 0.0 && b.break_s >= 0.0) {
                return Err(Error::config("breaks", "work_s must be > 0 and break_s >= 0"));
            }
        }
        Ok(())
    }

    /// Productive time elapsed by wall time `t`.
    pub fn working_time(&self, t: f64) -> f64 {
        match self.breaks {
            None => t,
            Some(b) => {
                let period = b.work_s + b.break_s;
                let full = (t / period).floor();
                full * b.work_s + (t - full * period).min(b.work_s)
            }
        }
    }

    pub fn count_at(&self, t: f64) -> u32 {
        // the epsilon keeps exact multiples of takt from rounding down
        ((self.working_time(t) + 1e-9) / self.takt_s).floor() as u32
    }
}

/// Cumulative completed units sampled every second, `0..=horizon_s`.
pub fn project_shift(model: &TimingModel, horizon_s: u32) -> Result<Vec<u32>> {
    model.validate()?;
    if horizon_s == 0 {
        return Err(Error::config("horizon", "must be > 0"));
    }
    Ok((0..=horizon_s).map(|t| model.count_at(t as f64)).collect())
}

/// Per-second step series from completion times (s).
pub fn series_from_completions(completions_s: &[f64], horizon_s: u32) -> Vec<u32> {
    let mut sorted = completions_s.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut out = Vec::with_capacity(horizon_s as usize + 1);
    let mut n = 0;
    for t in 0..=horizon_s {
        while n < sorted.len() && sorted[n] <= t as f64 {
            n += 1;
        }
        out.push(n as u32);
    }
    out
}

/// When `a` overtakes `b`. Zero if `a` never falls behind; otherwise the
/// first second after `a` first trails at which it is strictly ahead.
/// `None` if that never happens.
pub fn crossover(a: &[u32], b: &[u32]) -> Option<usize> {
    let n = a.len().min(b.len());
    let behind = (0..n).find(|&t| a[t] < b[t]);
    match behind {
        None => Some(0),
        Some(start) => (start..n).find(|&t| a[t] > b[t]),
    }
}

/// Earliest second from which `a ≥ b` holds through the end of the series.
pub fn lasting_crossover(a: &[u32], b: &[u32]) -> Option<usize> {
    let n = a.len().min(b.len());
    let mut first = None;
    for t in (0..n).rev() {
        if a[t] >= b[t] {
            first = Some(t);
        } else {
            break;
        }
    }
    first
}

pub fn write_series_csv<W: std::io::Write>(w: W, series: &[u32]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["time_s", "count"])?;
    for (t, c) in series.iter().enumerate() {
        out.write_record([t.to_string(), c.to_string()])?;
    }
    out.flush().map_err(|e| Error::io("series csv", e))?;
    Ok(())
}
