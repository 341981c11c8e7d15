use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::grid::{segment, voxelize, GridSpec, LabeledVoxelGrid, VoxelSet};
use super::predict::{ConfiguredPredictor, OccupancyPredictor, PredictQuery, PredictorConfig};
use super::ssm::{dynamic_zone_decide, LinkState, SsmParams};
use super::zones::{
    decide_mode, SafetyDecision, SpeedMode, ZoneKind, ZoneMask, ZoneSpec, DEFAULT_THRESHOLD,
};
use crate::error::{Error, Result};
use crate::geometry::{Cuboid, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ZoneStrategy {
    /// Fixed stop zone plus fixed slowdown zone.
    #[default]
    Fixed,
    /// Per-link protective spheres replace the stop zone.
    Dynamic,
}

fn default_threshold() -> f64 {
    DEFAULT_THRESHOLD
}

fn default_padding() -> f64 {
    0.08
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonitorConfig {
    pub grid: GridSpec,
    pub stop_zone: ZoneSpec,
    pub slowdown_zone: ZoneSpec,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    #[serde(default)]
    pub strategy: ZoneStrategy,
    #[serde(default)]
    pub ssm: SsmParams,
    /// Growth applied to robot and tool cuboids before segmentation so
    /// that sensor noise on their surfaces is not read as an obstacle.
    #[serde(default = "default_padding")]
    pub segmentation_padding: f64,
    /// Ticks a less restrictive mode must persist before it is applied.
    #[serde(default)]
    pub debounce_ticks: u32,
    #[serde(default)]
    pub predictor: PredictorConfig,
}

impl Default for MonitorConfig {
    fn default() -> Self {
        Self {
            grid: GridSpec::default(),
            stop_zone: ZoneSpec::default_stop(),
            slowdown_zone: ZoneSpec::default_slowdown(),
            threshold: DEFAULT_THRESHOLD,
            strategy: ZoneStrategy::Fixed,
            ssm: SsmParams::default(),
            segmentation_padding: default_padding(),
            debounce_ticks: 0,
            predictor: PredictorConfig::Baseline,
        }
    }
}

impl MonitorConfig {
    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        self.ssm.validate()?;
        if self.stop_zone.kind != ZoneKind::Stop {
            return Err(Error::config("monitor.stop_zone.kind", "must be \"stop\""));
        }
        if self.slowdown_zone.kind != ZoneKind::Slowdown {
            return Err(Error::config(
                "monitor.slowdown_zone.kind",
                "must be \"slowdown\"",
            ));
        }
        for (name, z) in [("stop_zone", &self.stop_zone), ("slowdown_zone", &self.slowdown_zone)] {
            if !z.region.is_valid() {
                return Err(Error::config(
                    format!("monitor.{name}.region"),
                    "max must exceed min on every axis",
                ));
            }
        }
        if !(0.0..1.0).contains(&self.threshold) {
            return Err(Error::config("monitor.threshold", "must be in [0, 1)"));
        }
        if !(self.segmentation_padding >= 0.0) {
            return Err(Error::config("monitor.segmentation_padding", "must be >= 0"));
        }
        // surfaces zone/grid mismatches at load time
        ZoneMask::new(&self.grid, &self.stop_zone)?;
        ZoneMask::new(&self.grid, &self.slowdown_zone)?;
        self.predictor.build()?;
        Ok(())
    }
}

/// Robot geometry and motion at the instant of a scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct RobotSnapshot {
    /// Link cuboids and static fixtures, world frame, unpadded.
    pub body: Vec<Cuboid>,
    pub tool: Option<Cuboid>,
    pub links: Vec<LinkState>,
    #[serde(default)]
    pub joint_state: Vec<f64>,
}

/// Stateful wrapper around the per-tick pipeline; holds the compiled zone
/// masks, the predictor and the debounce state.
pub struct SafetyMonitor {
    config: MonitorConfig,
    predictor: ConfiguredPredictor,
    stop_mask: ZoneMask,
    slowdown_mask: ZoneMask,
    current: SpeedMode,
    relax_streak: u32,
}

impl SafetyMonitor {
    pub fn new(config: MonitorConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            predictor: config.predictor.build()?,
            stop_mask: ZoneMask::new(&config.grid, &config.stop_zone)?,
            slowdown_mask: ZoneMask::new(&config.grid, &config.slowdown_zone)?,
            config,
            current: SpeedMode::Normal,
            relax_streak: 0,
        })
    }

    pub fn config(&self) -> &MonitorConfig {
        &self.config
    }

    pub fn stop_mask(&self) -> &ZoneMask {
        &self.stop_mask
    }

    pub fn slowdown_mask(&self) -> &ZoneMask {
        &self.slowdown_mask
    }

    /// Voxelize and segment a scan against the padded robot geometry.
    pub fn label(&self, scan: &[Vec3], robot: &RobotSnapshot) -> LabeledVoxelGrid {
        let pad = self.config.segmentation_padding;
        let occupied = voxelize(scan, &self.config.grid);
        let body: Vec<Cuboid> = robot.body.iter().map(|c| c.padded(pad)).collect();
        let tool = robot.tool.map(|t| t.padded(pad));
        segment(&occupied, &self.config.grid, &body, tool.as_ref())
    }

    pub fn predict(&self, grid: &LabeledVoxelGrid, robot: &RobotSnapshot, tick: u64) -> VoxelSet {
        self.predictor.predict(
            grid,
            &PredictQuery {
                tick,
                joint_state: &robot.joint_state,
            },
        )
    }

    /// Zone evaluation for an already predicted occupancy set.
    pub fn decide(&self, predicted: &VoxelSet, robot: &RobotSnapshot) -> SafetyDecision {
        match self.config.strategy {
            ZoneStrategy::Fixed => {
                let stop_ratio = self.stop_mask.ratio(predicted);
                let slowdown_ratio = self.slowdown_mask.ratio(predicted);
                SafetyDecision {
                    stop_ratio,
                    slowdown_ratio,
                    mode: decide_mode(stop_ratio, slowdown_ratio, self.config.threshold),
                }
            }
            ZoneStrategy::Dynamic => dynamic_zone_decide(
                &robot.links,
                &self.config.ssm,
                predicted,
                &self.config.grid,
                &self.slowdown_mask,
                self.config.threshold,
            ),
        }
    }

    /// The undebounced decision; a pure function of its inputs.
    pub fn raw_decision(&self, scan: &[Vec3], robot: &RobotSnapshot, tick: u64) -> SafetyDecision {
        if scan.is_empty() && self.config.predictor.is_exact() {
            // nothing to label; skip building the dense grid
            return self.decide(&VoxelSet::new(), robot);
        }
        let grid = self.label(scan, robot);
        let predicted = self.predict(&grid, robot, tick);
        self.decide(&predicted, robot)
    }

    /// Raw decision passed through the debounce filter: tightening is
    /// immediate, relaxing waits for `debounce_ticks` consecutive ticks.
    pub fn evaluate(&mut self, scan: &[Vec3], robot: &RobotSnapshot, tick: u64) -> SafetyDecision {
        let raw = self.raw_decision(scan, robot, tick);
        self.filter(raw)
    }

    pub fn filter(&mut self, raw: SafetyDecision) -> SafetyDecision {
        if raw.mode <= self.current {
            self.current = raw.mode;
            self.relax_streak = 0;
        } else {
            self.relax_streak += 1;
            if self.relax_streak > self.config.debounce_ticks {
                self.current = raw.mode;
                self.relax_streak = 0;
            }
        }
        SafetyDecision {
            mode: self.current,
            ..raw
        }
    }
}

/// One full monitoring step: voxelize, segment, predict, evaluate zones,
/// pick a speed mode.
pub fn monitor_tick(
    scan: &[Vec3],
    robot: &RobotSnapshot,
    config: &MonitorConfig,
    tick: u64,
) -> Result<SafetyDecision> {
    Ok(SafetyMonitor::new(config.clone())?.raw_decision(scan, robot, tick))
}

/// Row of the decision log CSV.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecisionRow {
    pub tick: u64,
    pub stop_ratio: f64,
    pub slowdown_ratio: f64,
    pub mode: SpeedMode,
    pub speed_ratio: f64,
}

impl DecisionRow {
    pub fn new(tick: u64, d: &SafetyDecision) -> Self {
        Self {
            tick,
            stop_ratio: d.stop_ratio,
            slowdown_ratio: d.slowdown_ratio,
            mode: d.mode,
            speed_ratio: d.speed_ratio(),
        }
    }
}

pub fn write_decision_log<W: Write>(w: W, rows: &[DecisionRow]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    for r in rows {
        wtr.serialize(r)?;
    }
    wtr.flush()
        .map_err(|e| Error::io("flushing decision log", e))?;
    Ok(())
}

pub fn read_decision_log<R: Read>(r: R) -> Result<Vec<DecisionRow>> {
    let mut rdr = csv::Reader::from_reader(r);
    rdr.deserialize()
        .map(|row| row.map_err(Error::from))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn robot_at(center: Vec3) -> RobotSnapshot {
        RobotSnapshot {
            body: vec![Cuboid::axis_aligned(center, Vec3::new(0.08, 0.08, 0.2))],
            tool: None,
            links: vec![LinkState::at_rest(center)],
            joint_state: vec![],
        }
    }

    /// Dense surface samples of a cuboid's faces.
    fn surface(c: &Cuboid, step: f64) -> Vec<Vec3> {
        let h = c.half_extents;
        let mut pts = Vec::new();
        let n = |e: f64| ((2.0 * e) / step).ceil() as usize + 1;
        for axis in 0..3 {
            let (a, b) = ((axis + 1) % 3, (axis + 2) % 3);
            for s in [-1.0, 1.0] {
                for i in 0..n(h[a]) {
                    for j in 0..n(h[b]) {
                        let mut p = Vec3::zeros();
                        p[axis] = s * h[axis];
                        p[a] = (-h[a] + i as f64 * step).min(h[a]);
                        p[b] = (-h[b] + j as f64 * step).min(h[b]);
                        pts.push(c.pose.transform_point(&p));
                    }
                }
            }
        }
        pts
    }

    #[test]
    fn robot_returns_do_not_trigger() {
        let robot = robot_at(Vec3::new(-0.1, -0.2, 1.0));
        let scan = surface(&robot.body[0], 0.01);
        let d = monitor_tick(&scan, &robot, &MonitorConfig::default(), 0).unwrap();
        assert_eq!(d.mode, SpeedMode::Normal);
        assert_eq!(d.stop_ratio, 0.0);
    }

    #[test]
    fn obstacle_in_stop_zone_stops() {
        let robot = robot_at(Vec3::new(-0.1, 0.3, 1.0));
        let box_ = Cuboid::axis_aligned(Vec3::new(-0.1, -0.6, 0.8), Vec3::new(0.2, 0.1, 0.2));
        let d = monitor_tick(&surface(&box_, 0.01), &robot, &MonitorConfig::default(), 0).unwrap();
        assert_eq!(d.mode, SpeedMode::Stop);
    }

    #[test]
    fn debounce_delays_relaxation_only() {
        let cfg = MonitorConfig {
            debounce_ticks: 2,
            ..MonitorConfig::default()
        };
        let mut m = SafetyMonitor::new(cfg).unwrap();
        let stop = SafetyDecision {
            mode: SpeedMode::Stop,
            ..SafetyDecision::normal()
        };
        let modes: Vec<SpeedMode> = [stop, SafetyDecision::normal(), SafetyDecision::normal(), SafetyDecision::normal(), stop]
            .into_iter()
            .map(|d| m.filter(d).mode)
            .collect();
        assert_eq!(
            modes,
            [SpeedMode::Stop, SpeedMode::Stop, SpeedMode::Stop, SpeedMode::Normal, SpeedMode::Stop]
        );
    }

    #[test]
    fn config_rejects_swapped_zone_kinds() {
        let cfg = MonitorConfig {
            stop_zone: ZoneSpec::default_slowdown(),
            ..MonitorConfig::default()
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn decision_log_roundtrip() {
        let rows = vec![
            DecisionRow::new(0, &SafetyDecision::normal()),
            DecisionRow::new(
                1,
                &SafetyDecision {
                    stop_ratio: 9.0 / 8910.0,
                    slowdown_ratio: 0.1,
                    mode: SpeedMode::Stop,
                },
            ),
        ];
        let mut buf = Vec::new();
        write_decision_log(&mut buf, &rows).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("tick,stop_ratio,slowdown_ratio,mode,speed_ratio\n"));
        assert!(text.contains(",stop,0.0"));
        assert_eq!(read_decision_log(&buf[..]).unwrap(), rows);
    }
}
