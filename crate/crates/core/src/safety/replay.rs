//! Line-delimited JSON logs of raw scans and robot motion, one record per
//! tick, for offline replay.

use std::io::{BufRead, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::monitor::RobotSnapshot;
use crate::error::{Error, Result};
use crate::geometry::Vec3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRecord {
    pub tick: u64,
    pub time_s: f64,
    pub points: Vec<[f64; 3]>,
}

impl ScanRecord {
    pub fn new(tick: u64, time_s: f64, points: &[Vec3]) -> Self {
        Self {
            tick,
            time_s,
            points: points.iter().map(|p| [p.x, p.y, p.z]).collect(),
        }
    }

    pub fn cloud(&self) -> Vec<Vec3> {
        self.points.iter().map(|p| Vec3::from(*p)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MotionRecord {
    pub tick: u64,
    pub time_s: f64,
    pub robot: RobotSnapshot,
}

pub fn write_jsonl<W: Write, T: Serialize>(mut w: W, records: &[T]) -> Result<()> {
    for r in records {
        write_jsonl_record(&mut w, r)?;
    }
    w.flush().map_err(|e| Error::io("flushing log", e))
}

pub fn write_jsonl_record<W: Write, T: Serialize>(w: &mut W, record: &T) -> Result<()> {
    serde_json::to_writer(&mut *w, record)
        .map_err(|e| Error::io("writing log record", e.into()))?;
    w.write_all(b"\n").map_err(|e| Error::io("writing log record", e))
}

/// Reads one record per non-empty line; parse failures carry the line
/// number.
pub fn read_jsonl<R: BufRead, T: DeserializeOwned>(r: R, path: &Path) -> Result<Vec<T>> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line.map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec = serde_json::from_str(&line).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push(rec);
    }
    Ok(out)
}

pub fn read_scan_log(path: &Path) -> Result<Vec<ScanRecord>> {
    let f = std::fs::File::open(path).map_err(|e| Error::io(format!("opening {}", path.display()), e))?;
    read_jsonl(std::io::BufReader::new(f), path)
}

pub fn read_motion_log(path: &Path) -> Result<Vec<MotionRecord>> {
    let f = std::fs::File::open(path).map_err(|e| Error::io(format!("opening {}", path.display()), e))?;
    read_jsonl(std::io::BufReader::new(f), path)
}

/// Checks that both logs cover the same ticks in the same order.
pub fn check_aligned(scans: &[ScanRecord], motion: &[MotionRecord]) -> Result<()> {
    let n = scans.len().max(motion.len());
    for i in 0..n {
        let s = scans.get(i).map(|r| r.tick);
        let m = motion.get(i).map(|r| r.tick);
        if s.is_none() || s != m {
            return Err(Error::Misaligned {
                index: i,
                scan_tick: s,
                motion_tick: m,
            });
        }
    }
    Ok(())
}
