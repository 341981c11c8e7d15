use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Aabb;
use crate::safety::{
    check_aligned, MonitorConfig, MotionRecord, SafetyDecision, SafetyMonitor, ScanRecord, SpeedMode, ZoneStrategy,
};

pub const DEFAULT_MARGIN_M: f64 = 0.2;

/// Safety policies that can be replayed against recorded logs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Strategy {
    /// No intervention; the baseline.
    None,
    /// Stop on any obstacle return within `margin_m` of the table footprint.
    FixedMargin { margin_m: f64 },
    FixedZones,
    DynamicSpheres,
}

impl Strategy {
    pub const ALL: [Strategy; 4] = [
        Strategy::None,
        Strategy::FixedMargin {
            margin_m: DEFAULT_MARGIN_M,
        },
        Strategy::FixedZones,
        Strategy::DynamicSpheres,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Strategy::None => "none",
            Strategy::FixedMargin { .. } => "fixed_margin",
            Strategy::FixedZones => "fixed_zones",
            Strategy::DynamicSpheres => "dynamic_spheres",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Strategy::FixedMargin { margin_m } if *margin_m != DEFAULT_MARGIN_M => {
                write!(f, "fixed_margin={margin_m}")
            }
            s => f.write_str(s.name()),
        }
    }
}

impl FromStr for Strategy {
    type Err = Error;

    /// `none`, `fixed_margin[=<m>]`, `fixed_zones` or `dynamic_spheres`.
    fn from_str(s: &str) -> Result<Self> {
        let (name, arg) = match s.split_once('=') {
            Some((n, a)) => (n.trim(), Some(a.trim())),
            None => (s.trim(), None),
        };
        let bad = || Error::config("strategies", format!("unknown strategy '{s}'"));
        match (name, arg) {
            ("none", None) => Ok(Strategy::None),
            ("fixed_zones", None) => Ok(Strategy::FixedZones),
            ("dynamic_spheres", None) => Ok(Strategy::DynamicSpheres),
            ("fixed_margin", None) => Ok(Strategy::FixedMargin {
                margin_m: DEFAULT_MARGIN_M,
            }),
            ("fixed_margin", Some(a)) => {
                let margin_m: f64 = a.parse().map_err(|_| bad())?;
                if !(margin_m >= 0.0) {
                    return Err(Error::config("strategies", "margin must be >= 0"));
                }
                Ok(Strategy::FixedMargin { margin_m })
            }
            _ => Err(bad()),
        }
    }
}

/// Region watched by the fixed-margin baseline: the table footprint grown
/// by `margin_m` in x and y, over the full grid height.
pub fn margin_region(config: &MonitorConfig, margin_m: f64) -> Aabb {
    let table = config.stop_zone.region;
    let grid = config.grid.region();
    Aabb {
        min: [table.min.x - margin_m, table.min.y - margin_m, grid.min.z].into(),
        max: [table.max.x + margin_m, table.max.y + margin_m, grid.max.z].into(),
    }
}

/// Per-tick decisions of `strategy` over aligned logs, debounced like the
/// live monitor.
pub fn replay_strategy(
    scans: &[ScanRecord],
    motion: &[MotionRecord],
    config: &MonitorConfig,
    strategy: Strategy,
) -> Result<Vec<SafetyDecision>> {
    check_aligned(scans, motion)?;
    let mut cfg = config.clone();
    if let Strategy::DynamicSpheres = strategy {
        cfg.strategy = ZoneStrategy::Dynamic;
    } else {
        cfg.strategy = ZoneStrategy::Fixed;
    }
    let mut monitor = SafetyMonitor::new(cfg)?;
    let margin = match strategy {
        Strategy::FixedMargin { margin_m } => Some(margin_region(config, margin_m)),
        _ => None,
    };
    let mut out = Vec::with_capacity(scans.len());
    for (s, m) in scans.iter().zip(motion) {
        let cloud = s.cloud();
        let decision = match (strategy, &margin) {
            (Strategy::None, _) => SafetyDecision::normal(),
            (Strategy::FixedMargin { .. }, Some(region)) => {
                let hits = if cloud.is_empty() {
                    0
                } else {
                    let grid = monitor.label(&cloud, &m.robot);
                    let predicted = monitor.predict(&grid, &m.robot, s.tick);
                    let spec = &monitor.config().grid;
                    predicted.iter().filter(|&i| region.contains(&spec.center(i))).count()
                };
                monitor.filter(SafetyDecision {
                    stop_ratio: hits as f64,
                    slowdown_ratio: 0.0,
                    mode: if hits > 0 { SpeedMode::Stop } else { SpeedMode::Normal },
                })
            }
            _ => monitor.evaluate(&cloud, &m.robot, s.tick),
        };
        out.push(decision);
    }
    Ok(out)
}

/// Extra wall time one tick costs at `ratio`: slowed motion stretches by
/// `1/ratio`, a stop adds the whole tick.
pub fn dilation(dt: f64, ratio: f64) -> f64 {
    if ratio > 0.0 {
        dt * (1.0 / ratio - 1.0)
    } else {
        dt
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyRow {
    pub strategy: String,
    pub ticks: u64,
    pub stop_ticks: u64,
    pub slowdown_ticks: u64,
    pub production_time_s: f64,
    pub increase_pct: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductivityReport {
    pub dt_s: f64,
    pub rows: Vec<StrategyRow>,
    /// Whether the margin region covers the whole slowdown zone, in which
    /// case fixed_margin can never cost less than fixed_zones.
    pub margin_contains_slowdown: bool,
}

impl ProductivityReport {
    pub fn row(&self, strategy: &str) -> Option<&StrategyRow> {
        self.rows.iter().find(|r| r.strategy == strategy)
    }

    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        for r in &self.rows {
            out.serialize(r)?;
        }
        out.flush().map_err(|e| Error::io("report csv", e))?;
        Ok(())
    }

    pub fn summary(&self) -> String {
        let mut s = String::new();
        for r in &self.rows {
            s.push_str(&format!(
                "{:<16} production {:>9.1} s  +{:>6.2}%  stop {:>6} ticks  slowdown {:>6} ticks\n",
                r.strategy, r.production_time_s, r.increase_pct, r.stop_ticks, r.slowdown_ticks
            ));
        }
        s
    }
}

/// Replays each strategy and reports production-time increase relative to
/// the undisturbed log duration (the `none` baseline).
pub fn replay_compare(
    scans: &[ScanRecord],
    motion: &[MotionRecord],
    config: &MonitorConfig,
    strategies: &[Strategy],
) -> Result<ProductivityReport> {
    if scans.is_empty() {
        return Err(Error::EmptyInput("scan log"));
    }
    check_aligned(scans, motion)?;
    let dt = config.ssm.cycle_dt;
    let base = scans.len() as f64 * dt;
    let mut rows = Vec::with_capacity(strategies.len());
    for &s in strategies {
        let decisions = replay_strategy(scans, motion, config, s)?;
        let extra: f64 = decisions.iter().map(|d| dilation(dt, d.speed_ratio())).sum();
        rows.push(StrategyRow {
            strategy: s.to_string(),
            ticks: decisions.len() as u64,
            stop_ticks: decisions.iter().filter(|d| d.mode == SpeedMode::Stop).count() as u64,
            slowdown_ticks: decisions.iter().filter(|d| d.mode == SpeedMode::Slowdown).count() as u64,
            production_time_s: base + extra,
            increase_pct: extra / base * 100.0,
        });
    }
    let margin_contains_slowdown = strategies.iter().any(|s| match s {
        Strategy::FixedMargin { margin_m } => {
            margin_region(config, *margin_m).contains_box(&config.slowdown_zone.region)
        }
        _ => false,
    });
    Ok(ProductivityReport {
        dt_s: dt,
        rows,
        margin_contains_slowdown,
    })
}
