use crate::error::{Error, Result};
use crate::scheduler::CycleRecord;

/// Total wall time of the cycles divided by their count.
pub fn effective_takt(records: &[CycleRecord]) -> Result<f64> {
    if records.is_empty() {
        return Err(Error::EmptyInput("cycle records"));
    }
    // running mean; exact when every cycle took the same time
    let mut mean = 0.0;
    for (k, r) in records.iter().enumerate() {
        mean += (r.wall_s - mean) / (k + 1) as f64;
    }
    Ok(mean)
}

/// Shift length over completed units, counting the unfinished tail.
pub fn shift_takt(duration_s: f64, completed: usize) -> Result<f64> {
    if completed == 0 {
        return Err(Error::EmptyInput("completed cycles"));
    }
    Ok(duration_s / completed as f64)
}

/// Nearest-rank percentile: the value at rank `ceil(p/100 · n)`.
pub fn nearest_rank(sorted: &[f64], p: f64) -> Result<f64> {
    if sorted.is_empty() {
        return Err(Error::EmptyInput("percentile sample"));
    }
    if !(p > 0.0 && p < 100.0) {
        return Err(Error::config("percentile", format!("{p} is not in (0, 100)")));
    }
    let rank = ((p / 100.0) * sorted.len() as f64).ceil().max(1.0) as usize;
    Ok(sorted[rank.min(sorted.len()) - 1])
}

/// Nearest-rank percentiles of cycle wall times.
pub fn cycle_percentiles(records: &[CycleRecord], ps: &[f64]) -> Result<Vec<f64>> {
    let mut walls: Vec<f64> = records.iter().map(|r| r.wall_s).collect();
    walls.sort_by(f64::total_cmp);
    ps.iter().map(|&p| nearest_rank(&walls, p)).collect()
}

/// Normal-approximation band `p ± z·sqrt(p(1-p)/n)`, clipped to [0, 1].
pub fn binomial_band(p: f64, n: u64, z: f64) -> (f64, f64) {
    let half = z * (p * (1.0 - p) / n as f64).sqrt();
    ((p - half).max(0.0), (p + half).min(1.0))
}
