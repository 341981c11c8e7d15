use std::collections::VecDeque;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::actors::{obstacle_at, ObstacleScript, VisitSchedule};
use super::lidar::Lidar;
use super::scenario::Scenario;
use crate::error::Result;
use crate::geometry::{Cuboid, Vec3};
use crate::safety::{DecisionRow, MotionRecord, RobotSnapshot, SafetyDecision, SafetyMonitor, ScanRecord};
use crate::scheduler::SafetySource;
use crate::seed::mix;

const LIDAR_RUN_STREAM: u64 = 1;
const LIDAR_SCAN_STREAM: u64 = 2;
const WORKER_STREAM: u64 = 3;
const OBSTACLE_STREAM: u64 = 4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Clock {
    pub tick: u64,
    pub dt: f64,
}

impl Clock {
    pub fn time_s(&self) -> f64 {
        self.tick as f64 * self.dt
    }
}

/// World geometry at one instant, as the sensor would see it.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Frame {
    pub robot: Vec<Cuboid>,
    pub external: Vec<Cuboid>,
}

/// The simulated cell. All randomness is drawn from streams keyed on the
/// scenario seed, so a run is reproducible bit for bit.
pub struct World {
    scenario: Scenario,
    clock: Clock,
    phase: f64,
    last_ratio: f64,
    lidar: Lidar,
    schedules: Vec<VisitSchedule>,
    obstacles: Vec<(ObstacleScript, Cuboid)>,
    history: VecDeque<Frame>,
    scan_seed: u64,
}

impl World {
    pub fn new(scenario: Scenario) -> Result<Self> {
        scenario.validate()?;
        let seed = scenario.seed;
        let run = scenario.lidar.draw_run(mix(seed, LIDAR_RUN_STREAM), scenario.dt_s);
        let lidar = Lidar::new(scenario.lidar, run);
        let schedules = scenario
            .workers
            .iter()
            .enumerate()
            .map(|(i, w)| VisitSchedule::new(w, mix(mix(seed, WORKER_STREAM), i as u64)))
            .collect();
        let obstacles = scenario.obstacles.resolve(mix(seed, OBSTACLE_STREAM));
        let mut w = Self {
            clock: Clock {
                tick: 0,
                dt: scenario.dt_s,
            },
            phase: 0.0,
            last_ratio: 1.0,
            lidar,
            schedules,
            obstacles,
            history: VecDeque::new(),
            scan_seed: mix(seed, LIDAR_SCAN_STREAM),
            scenario,
        };
        let f = w.frame();
        w.history.push_back(f);
        Ok(w)
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn clock(&self) -> Clock {
        self.clock
    }

    pub fn lidar(&self) -> &Lidar {
        &self.lidar
    }

    /// Robot trajectory phase, s.
    pub fn phase(&self) -> f64 {
        self.phase
    }

    pub fn robot_snapshot(&self) -> RobotSnapshot {
        self.scenario.robot.snapshot(self.phase, self.last_ratio)
    }

    pub fn workers(&mut self) -> Vec<Cuboid> {
        let t = self.clock.time_s();
        let mut out = Vec::new();
        for (w, sched) in self.scenario.workers.iter().zip(self.schedules.iter_mut()) {
            if let Some(start) = sched.visit_start(t) {
                if let Some(c) = w.center_at(t - start) {
                    out.push(Cuboid::axis_aligned(c, w.half_extents));
                }
            }
        }
        out
    }

    pub fn external_cuboids(&mut self) -> Vec<Cuboid> {
        let t = self.clock.time_s();
        let mut out = self.workers();
        out.extend(self.obstacles.iter().filter_map(|(s, c)| obstacle_at(s, c, t)));
        out
    }

    fn frame(&mut self) -> Frame {
        let snap = self.robot_snapshot();
        let mut robot = snap.body;
        robot.extend(snap.tool);
        Frame {
            robot,
            external: self.external_cuboids(),
        }
    }

    /// Advance one tick. The robot trajectory progresses by `ratio · dt`;
    /// workers and obstacles follow wall time.
    pub fn tick(&mut self, ratio: f64) {
        self.phase = (self.phase + ratio * self.clock.dt).rem_euclid(self.scenario.robot.period_s);
        self.last_ratio = ratio;
        self.clock.tick += 1;
        let f = self.frame();
        self.history.push_back(f);
        while self.history.len() > self.lidar.run().delay_ticks + 1 {
            self.history.pop_front();
        }
    }

    /// The frame the sensor currently reports (delayed by the run's update
    /// delay, clamped to the start of the run).
    pub fn sensed_frame(&self) -> &Frame {
        self.history.front().expect("history never empty")
    }

    /// True when some external box is near enough to the grid to matter.
    /// Scans of ticks that fail this test cannot contain obstacle voxels,
    /// so they are skipped and recorded empty.
    pub fn scan_needed(&self) -> bool {
        let gate = self
            .scenario
            .monitor
            .grid
            .region()
            .expanded(self.scenario.scan_gate_margin_m);
        self.sensed_frame()
            .external
            .iter()
            .any(|c| c.aabb().intersects(&gate))
    }

    /// One scan of the sensed frame; every tick draws from its own stream.
    pub fn scan(&self) -> Vec<Vec3> {
        if !self.scan_needed() {
            return Vec::new();
        }
        self.scan_full()
    }

    /// Scan without the proximity gate.
    pub fn scan_full(&self) -> Vec<Vec3> {
        let f = self.sensed_frame();
        let mut all = f.robot.clone();
        all.extend_from_slice(&f.external);
        let mut rng = ChaCha8Rng::seed_from_u64(self.scan_seed);
        rng.set_stream(self.clock.tick);
        self.lidar.scan(&all, &mut rng)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Recording {
    pub decisions: Vec<DecisionRow>,
    pub scans: Vec<ScanRecord>,
    pub motion: Vec<MotionRecord>,
}

/// Couples the world with the safety monitor: each tick scans, decides and
/// advances the world at the decided speed.
pub struct WorldSafety {
    world: World,
    monitor: SafetyMonitor,
    record_scans: bool,
    recording: Recording,
}

impl WorldSafety {
    pub fn new(world: World, record_scans: bool) -> Result<Self> {
        let monitor = SafetyMonitor::new(world.scenario().monitor.clone())?;
        Ok(Self {
            world,
            monitor,
            record_scans,
            recording: Recording::default(),
        })
    }

    pub fn world(&self) -> &World {
        &self.world
    }

    pub fn recording(&self) -> &Recording {
        &self.recording
    }

    pub fn into_recording(self) -> Recording {
        self.recording
    }
}

impl SafetySource for WorldSafety {
    fn step(&mut self) -> Result<SafetyDecision> {
        let tick = self.world.clock().tick;
        let time_s = self.world.clock().time_s();
        let scan = self.world.scan();
        let robot = self.world.robot_snapshot();
        let decision = self.monitor.evaluate(&scan, &robot, tick);
        self.recording.decisions.push(DecisionRow::new(tick, &decision));
        if self.record_scans {
            self.recording.scans.push(ScanRecord::new(tick, time_s, &scan));
            self.recording.motion.push(MotionRecord { tick, time_s, robot });
        }
        self.world.tick(decision.speed_ratio());
        Ok(decision)
    }

    fn tick(&self) -> u64 {
        self.world.clock().tick
    }

    fn dt(&self) -> f64 {
        self.world.clock().dt
    }
}

/// Runs the monitor loop alone (robot cycling its trajectory) for
/// `duration_s` and returns everything it saw and decided.
pub fn run_monitor(world: World, duration_s: f64, record_scans: bool) -> Result<Recording> {
    let ticks = (duration_s / world.clock().dt + 1e-9).floor() as u64;
    let mut src = WorldSafety::new(world, record_scans)?;
    for _ in 0..ticks {
        src.step()?;
    }
    Ok(src.into_recording())
}
