use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::graph::{ControllerBinding, FailurePolicy, GraphError, TaskGraph};
use crate::controllers::{
    insert_with_retry, servo_run, validate_waypoints, ControllerOutcome, ControllerStatus, Diagnostics,
    LoadCellModel, PolicyEmulator, SimulatedServoOracle,
};
use crate::error::{Error, Result};
use crate::geometry::{Pose, Vec3};
use crate::safety::{SafetyDecision, SpeedMode};
use crate::seed::{mix, mix3};

/// Upper bound on node executions in one cycle; guards against goto loops.
const MAX_STEPS_PER_CYCLE: usize = 10_000;

/// Per-tick stream of safety decisions. `step` returns the decision that
/// governs the coming tick and advances the source by one tick under it.
pub trait SafetySource {
    fn step(&mut self) -> Result<SafetyDecision>;
    /// Index of the next tick to run.
    fn tick(&self) -> u64;
    fn dt(&self) -> f64;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScriptedEvent {
    pub start_s: f64,
    pub end_s: f64,
    pub mode: SpeedMode,
}

/// Safety stream from a fixed list of `[start, end)` intervals; overlapping
/// intervals resolve to the most restrictive mode.
#[derive(Debug, Clone)]
pub struct ScriptedSafety {
    dt: f64,
    tick: u64,
    events: Vec<ScriptedEvent>,
}

impl ScriptedSafety {
    pub fn new(dt: f64, events: Vec<ScriptedEvent>) -> Self {
        Self { dt, tick: 0, events }
    }

    pub fn nominal(dt: f64) -> Self {
        Self::new(dt, Vec::new())
    }

    pub fn mode_at(&self, tick: u64) -> SpeedMode {
        // tick k covers [k dt, (k+1) dt); compare in tick units to stay exact
        let k = tick as f64;
        self.events
            .iter()
            .filter(|e| k + 1e-9 >= e.start_s / self.dt && k + 1e-9 < e.end_s / self.dt)
            .map(|e| e.mode)
            .min()
            .unwrap_or(SpeedMode::Normal)
    }
}

impl SafetySource for ScriptedSafety {
    fn step(&mut self) -> Result<SafetyDecision> {
        let mode = self.mode_at(self.tick);
        self.tick += 1;
        Ok(SafetyDecision {
            mode,
            ..SafetyDecision::normal()
        })
    }

    fn tick(&self) -> u64 {
        self.tick
    }

    fn dt(&self) -> f64 {
        self.dt
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CycleOutcome {
    Pass,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleRecord {
    pub cycle: u64,
    pub start_tick: u64,
    pub end_tick: u64,
    /// Speed-ratio-1 equivalent time, s.
    pub nominal_s: f64,
    pub wall_s: f64,
    pub paused_s: f64,
    pub slowed_s: f64,
    /// Scheduler-level re-runs per node.
    pub retries: BTreeMap<String, u32>,
    /// Load-cell retractions inside controllers.
    pub controller_retries: u32,
    pub operations: u32,
    pub defects: u32,
    pub outcome: CycleOutcome,
    pub failed_node: Option<String>,
}

impl CycleRecord {
    pub fn total_retries(&self) -> u32 {
        self.retries.values().sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeEvent {
    pub cycle: u64,
    pub node: String,
    pub attempt: u32,
    pub start_tick: u64,
    pub end_tick: u64,
    pub outcome: String,
    pub iterations: u32,
    pub retries: u32,
}

/// Nominal duration and result of one controller execution.
pub fn execute_binding(binding: &ControllerBinding, seed: u64) -> Result<ControllerOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(match binding {
        ControllerBinding::HumanStep { duration_s } => ControllerOutcome {
            status: ControllerStatus::Succeeded,
            iterations: 1,
            elapsed_s: *duration_s,
            diagnostics: Diagnostics::default(),
        },
        ControllerBinding::Waypoint { waypoints } => {
            validate_waypoints(waypoints)?;
            ControllerOutcome {
                status: ControllerStatus::Succeeded,
                iterations: waypoints.len() as u32,
                elapsed_s: waypoints.iter().map(|w| w.duration_s).sum(),
                diagnostics: Diagnostics::default(),
            }
        }
        ControllerBinding::Servo {
            start_offset_m,
            start_offset_deg,
            error,
            config,
        } => {
            let target = Pose::identity();
            let dir = random_unit(&mut rng);
            let axis = random_unit(&mut rng);
            let start = Pose::from_axis_angle(&axis, (start_offset_deg * rng.random::<f64>()).to_radians())
                .with_translation(dir * *start_offset_m * rng.random::<f64>());
            let mut oracle = SimulatedServoOracle::new(target, *error, rng.random());
            servo_run(start, &mut oracle, config).0
        }
        ControllerBinding::Policy {
            emulator,
            insert,
            start_height_m,
            hole_radius_m,
            hole_sector_deg,
            stuck_probability,
        } => {
            emulator.validate()?;
            insert.validate()?;
            let half = hole_sector_deg.to_radians() / 2.0;
            let ang = if half > 0.0 { rng.random_range(-half..=half) } else { 0.0 } - PI / 2.0;
            let r = hole_radius_m * rng.random::<f64>();
            let nominal = emulator.target;
            let emu = PolicyEmulator {
                target: nominal + Vec3::new(r * ang.cos(), r * ang.sin(), 0.0),
                ..*emulator
            };
            let start = nominal + Vec3::new(0.0, 0.0, *start_height_m);
            let load_seed = rng.random();
            let load = stuck_probability.map(|p| LoadCellModel::new(p, load_seed));
            let fallback = LoadCellModel::new(0.0, load_seed);
            insert_with_retry(start, &emu, Some(load.as_ref().unwrap_or(&fallback)), insert)
        }
    })
}

fn random_unit<R: Rng>(rng: &mut R) -> Vec3 {
    loop {
        let v = Vec3::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        );
        let n = v.norm();
        if n > 1e-6 && n <= 1.0 {
            return v / n;
        }
    }
}

/// Tick-level bookkeeping shared by all nodes of one cycle.
struct Playout<'a> {
    source: &'a mut dyn SafetySource,
    deadline: Option<u64>,
    target: f64,
    progress: f64,
    ticks: u64,
    paused_ticks: u64,
    slowed_ticks: u64,
}

impl Playout<'_> {
    /// Consume ticks until `nominal` more seconds of progress are done.
    /// Returns false when the deadline cuts the cycle short.
    fn run(&mut self, nominal: f64) -> Result<bool> {
        let dt = self.source.dt();
        self.target += nominal;
        while self.progress + 1e-9 < self.target {
            if self.deadline.is_some_and(|d| self.source.tick() >= d) {
                return Ok(false);
            }
            let ratio = self.source.step()?.speed_ratio();
            self.progress += ratio * dt;
            self.ticks += 1;
            if ratio == 0.0 {
                self.paused_ticks += 1;
            } else if ratio < 1.0 {
                self.slowed_ticks += 1;
            }
        }
        Ok(true)
    }
}

pub fn ensure_valid(graph: &TaskGraph) -> Result<()> {
    let errs = graph.validate();
    if errs.is_empty() {
        return Ok(());
    }
    let msg: Vec<String> = errs.iter().map(GraphError::to_string).collect();
    Err(Error::config("task", msg.join("; ")))
}

/// Runs one cycle from the entry node to the terminal (or an abort).
/// Returns `None` if `deadline` (a tick index) is hit before the end.
pub fn run_cycle(
    graph: &TaskGraph,
    source: &mut dyn SafetySource,
    cycle: u64,
    seed: u64,
    deadline: Option<u64>,
    events: &mut Vec<NodeEvent>,
) -> Result<Option<CycleRecord>> {
    let cycle_seed = mix(seed, cycle);
    let start_tick = source.tick();
    let dt = source.dt();
    let mut play = Playout {
        source,
        deadline,
        target: 0.0,
        progress: 0.0,
        ticks: 0,
        paused_ticks: 0,
        slowed_ticks: 0,
    };
    let mut rec = CycleRecord {
        cycle,
        start_tick,
        end_tick: start_tick,
        nominal_s: 0.0,
        wall_s: 0.0,
        paused_s: 0.0,
        slowed_s: 0.0,
        retries: BTreeMap::new(),
        controller_retries: 0,
        operations: 0,
        defects: 0,
        outcome: CycleOutcome::Pass,
        failed_node: None,
    };
    let fail = |rec: &mut CycleRecord, id: &str| {
        rec.outcome = CycleOutcome::Fail;
        rec.failed_node.get_or_insert_with(|| id.to_string());
    };

    let mut current = graph.entry.clone();
    let mut attempt = 0u32;
    let mut steps = 0usize;
    loop {
        steps += 1;
        let idx = graph
            .index_of(&current)
            .ok_or_else(|| Error::config("task", format!("missing node {current:?}")))?;
        let node = &graph.nodes[idx];
        if steps > MAX_STEPS_PER_CYCLE {
            fail(&mut rec, &node.id);
            break;
        }
        let outcome = execute_binding(&node.controller, mix3(cycle_seed, idx as u64, attempt as u64))?;
        let t0 = play.source.tick();
        if !play.run(outcome.elapsed_s)? {
            return Ok(None);
        }
        rec.controller_retries += outcome.diagnostics.retries;
        let label = match (outcome.status, outcome.diagnostics.premature) {
            (ControllerStatus::Succeeded, true) => "premature",
            (ControllerStatus::Succeeded, false) => "succeeded",
            _ => "failed",
        };
        events.push(NodeEvent {
            cycle,
            node: node.id.clone(),
            attempt,
            start_tick: t0,
            end_tick: play.source.tick(),
            outcome: label.into(),
            iterations: outcome.iterations,
            retries: outcome.diagnostics.retries,
        });

        let next = if outcome.succeeded() {
            if node.qc {
                rec.operations += 1;
                if outcome.diagnostics.premature {
                    // passes the controller, fails inspection
                    rec.defects += 1;
                    fail(&mut rec, &node.id);
                }
            }
            node.on_success.clone()
        } else {
            match &node.on_failure {
                FailurePolicy::Retry { attempts } if attempt < *attempts => {
                    attempt += 1;
                    *rec.retries.entry(node.id.clone()).or_default() += 1;
                    continue;
                }
                FailurePolicy::Retry { .. } | FailurePolicy::AbortCycle => {
                    if node.qc {
                        rec.operations += 1;
                        rec.defects += 1;
                    }
                    fail(&mut rec, &node.id);
                    None
                }
                FailurePolicy::OperatorAlert { resolve_s } => {
                    let t0 = play.source.tick();
                    if !play.run(*resolve_s)? {
                        return Ok(None);
                    }
                    events.push(NodeEvent {
                        cycle,
                        node: node.id.clone(),
                        attempt,
                        start_tick: t0,
                        end_tick: play.source.tick(),
                        outcome: "operator".into(),
                        iterations: 0,
                        retries: 0,
                    });
                    if node.qc {
                        rec.operations += 1;
                    }
                    node.on_success.clone()
                }
                FailurePolicy::Goto { node: target } => Some(target.clone()),
            }
        };
        attempt = 0;
        match next {
            Some(n) => current = n,
            None => break,
        }
    }

    rec.end_tick = play.source.tick();
    rec.nominal_s = play.target;
    rec.wall_s = play.ticks as f64 * dt;
    rec.paused_s = play.paused_ticks as f64 * dt;
    rec.slowed_s = play.slowed_ticks as f64 * dt;
    Ok(Some(rec))
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ShiftResult {
    pub cycles: Vec<CycleRecord>,
    pub events: Vec<NodeEvent>,
}

impl ShiftResult {
    pub fn operations(&self) -> u32 {
        self.cycles.iter().map(|c| c.operations).sum()
    }

    pub fn defects(&self) -> u32 {
        self.cycles.iter().map(|c| c.defects).sum()
    }

    /// Share of quality-checked operations without a defect.
    pub fn pass_rate(&self) -> Option<f64> {
        let ops = self.operations();
        (ops > 0).then(|| 1.0 - self.defects() as f64 / ops as f64)
    }
}

/// Back-to-back cycles until `duration_s` has elapsed; a cycle that would
/// end after that is discarded.
pub fn run_shift(
    graph: &TaskGraph,
    source: &mut dyn SafetySource,
    duration_s: f64,
    seed: u64,
) -> Result<ShiftResult> {
    ensure_valid(graph)?;
    if !(duration_s > 0.0) {
        return Err(Error::config("duration_s", "must be > 0"));
    }
    let deadline = source.tick() + (duration_s / source.dt() + 1e-9).floor() as u64;
    let mut out = ShiftResult::default();
    for cycle in 0.. {
        let mut events = Vec::new();
        match run_cycle(graph, source, cycle, seed, Some(deadline), &mut events)? {
            Some(rec) => {
                out.cycles.push(rec);
                out.events.extend(events);
            }
            None => break,
        }
        if source.tick() >= deadline {
            break;
        }
    }
    Ok(out)
}

pub fn write_cycle_csv<W: Write>(w: W, cycles: &[CycleRecord]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record([
        "cycle",
        "start_tick",
        "end_tick",
        "nominal_s",
        "wall_s",
        "paused_s",
        "slowed_s",
        "retries",
        "controller_retries",
        "operations",
        "defects",
        "outcome",
        "failed_node",
    ])?;
    for c in cycles {
        let retries: Vec<String> = c.retries.iter().map(|(k, v)| format!("{k}:{v}")).collect();
        wtr.write_record([
            c.cycle.to_string(),
            c.start_tick.to_string(),
            c.end_tick.to_string(),
            c.nominal_s.to_string(),
            c.wall_s.to_string(),
            c.paused_s.to_string(),
            c.slowed_s.to_string(),
            retries.join(";"),
            c.controller_retries.to_string(),
            c.operations.to_string(),
            c.defects.to_string(),
            match c.outcome {
                CycleOutcome::Pass => "pass".into(),
                CycleOutcome::Fail => "fail".into(),
            },
            c.failed_node.clone().unwrap_or_default(),
        ])?;
    }
    wtr.flush().map_err(|e| Error::io("writing cycle log", e))
}

pub fn write_event_csv<W: Write>(w: W, events: &[NodeEvent]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    for e in events {
        wtr.serialize(e)?;
    }
    if events.is_empty() {
        wtr.write_record(["cycle", "node", "attempt", "start_tick", "end_tick", "outcome", "iterations", "retries"])?;
    }
    wtr.flush().map_err(|e| Error::io("writing event log", e))
}
