use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::controllers::{InsertConfig, PolicyEmulator, ServoConfig, ServoErrorModel, Waypoint};
use crate::geometry::Pose;

/// Controller bound to a task node. Randomized start conditions are drawn
/// per execution from the node seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ControllerBinding {
    Servo {
        /// Start offsets are drawn up to these magnitudes, m and degrees.
        start_offset_m: f64,
        start_offset_deg: f64,
        #[serde(default)]
        error: ServoErrorModel,
        #[serde(default)]
        config: ServoConfig,
    },
    Policy {
        #[serde(default)]
        emulator: PolicyEmulator,
        #[serde(default)]
        insert: InsertConfig,
        /// Height above the nominal hole at which the policy takes over, m.
        start_height_m: f64,
        /// Radius of the hole-position envelope around nominal, m.
        #[serde(default)]
        hole_radius_m: f64,
        /// Angular width of that envelope, degrees.
        #[serde(default)]
        hole_sector_deg: f64,
        /// `None` disables load-cell monitoring.
        #[serde(default)]
        stuck_probability: Option<f64>,
    },
    Waypoint { waypoints: Vec<Waypoint> },
    HumanStep { duration_s: f64 },
}

impl ControllerBinding {
    pub fn waypoint(duration_s: f64) -> Self {
        ControllerBinding::Waypoint {
            waypoints: vec![Waypoint {
                pose: Pose::identity(),
                duration_s,
            }],
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            ControllerBinding::Servo { .. } => "servo",
            ControllerBinding::Policy { .. } => "policy",
            ControllerBinding::Waypoint { .. } => "waypoint",
            ControllerBinding::HumanStep { .. } => "human_step",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FailurePolicy {
    /// Re-run the node up to `attempts` more times, then abort the cycle.
    Retry { attempts: u32 },
    /// Pause for an operator who then completes the step by hand.
    OperatorAlert { resolve_s: f64 },
    AbortCycle,
    Goto { node: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskNode {
    pub id: String,
    pub controller: ControllerBinding,
    /// `None` only on the terminal node.
    #[serde(default)]
    pub on_success: Option<String>,
    pub on_failure: FailurePolicy,
    /// Node output is quality-checked; its executions count towards the
    /// pass rate.
    #[serde(default)]
    pub qc: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskGraph {
    pub entry: String,
    pub terminal: String,
    pub nodes: Vec<TaskNode>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GraphError {
    DuplicateNode(String),
    MissingNode { from: String, to: String },
    MissingEntry(String),
    MissingTerminal(String),
    TerminalHasSuccessor(String),
    DeadEnd(String),
    Unreachable(String),
    TerminalNotReached,
    ZeroProgress(String),
    BadDuration(String),
}

impl fmt::Display for GraphError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GraphError::DuplicateNode(id) => write!(f, "duplicate node id {id:?}"),
            GraphError::MissingNode { from, to } => write!(f, "node {from:?} refers to missing node {to:?}"),
            GraphError::MissingEntry(id) => write!(f, "entry node {id:?} does not exist"),
            GraphError::MissingTerminal(id) => write!(f, "terminal node {id:?} does not exist"),
            GraphError::TerminalHasSuccessor(id) => write!(f, "terminal node {id:?} has an on_success edge"),
            GraphError::DeadEnd(id) => write!(f, "non-terminal node {id:?} has no on_success edge"),
            GraphError::Unreachable(id) => write!(f, "node {id:?} is unreachable from the entry"),
            GraphError::TerminalNotReached => write!(f, "entry does not reach the terminal via on_success edges"),
            GraphError::ZeroProgress(id) => write!(f, "node {id:?} has a failure loop that can never make progress"),
            GraphError::BadDuration(id) => write!(f, "node {id:?} has a non-positive duration"),
        }
    }
}

impl TaskGraph {
    pub fn node(&self, id: &str) -> Option<&TaskNode> {
        self.nodes.iter().find(|n| n.id == id)
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n.id == id)
    }

    /// All structural problems, in node order.
    pub fn validate(&self) -> Vec<GraphError> {
        let mut errs = Vec::new();
        let mut ids = BTreeSet::new();
        for n in &self.nodes {
            if !ids.insert(n.id.as_str()) {
                errs.push(GraphError::DuplicateNode(n.id.clone()));
            }
        }
        if !ids.contains(self.entry.as_str()) {
            errs.push(GraphError::MissingEntry(self.entry.clone()));
        }
        if !ids.contains(self.terminal.as_str()) {
            errs.push(GraphError::MissingTerminal(self.terminal.clone()));
        }

        let mut edges: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
        for n in &self.nodes {
            let out = edges.entry(n.id.as_str()).or_default();
            match (&n.on_success, n.id == self.terminal) {
                (Some(_), true) => errs.push(GraphError::TerminalHasSuccessor(n.id.clone())),
                (None, false) => errs.push(GraphError::DeadEnd(n.id.clone())),
                _ => {}
            }
            if let Some(next) = &n.on_success {
                if ids.contains(next.as_str()) {
                    out.push(next.as_str());
                } else {
                    errs.push(GraphError::MissingNode {
                        from: n.id.clone(),
                        to: next.clone(),
                    });
                }
            }
            match &n.on_failure {
                FailurePolicy::Goto { node } => {
                    if !ids.contains(node.as_str()) {
                        errs.push(GraphError::MissingNode {
                            from: n.id.clone(),
                            to: node.clone(),
                        });
                    } else if *node == n.id {
                        errs.push(GraphError::ZeroProgress(n.id.clone()));
                    } else {
                        out.push(node.as_str());
                    }
                }
                // retry(0) reads as an unbounded self-loop
                FailurePolicy::Retry { attempts: 0 } => errs.push(GraphError::ZeroProgress(n.id.clone())),
                FailurePolicy::OperatorAlert { resolve_s } if !(*resolve_s > 0.0) => {
                    errs.push(GraphError::BadDuration(n.id.clone()))
                }
                _ => {}
            }
            let bad_duration = match &n.controller {
                ControllerBinding::HumanStep { duration_s } => !(*duration_s > 0.0),
                ControllerBinding::Waypoint { waypoints } => {
                    waypoints.is_empty() || waypoints.iter().any(|w| !(w.duration_s > 0.0))
                }
                ControllerBinding::Servo { config, .. } => config.max_iters == 0,
                ControllerBinding::Policy { .. } => false,
            };
            if bad_duration {
                errs.push(GraphError::BadDuration(n.id.clone()));
            }
        }

        if ids.contains(self.entry.as_str()) {
            let mut seen = BTreeSet::new();
            let mut queue = VecDeque::from([self.entry.as_str()]);
            while let Some(id) = queue.pop_front() {
                if !seen.insert(id) {
                    continue;
                }
                if let Some(out) = edges.get(id) {
                    queue.extend(out.iter().copied());
                }
            }
            for n in &self.nodes {
                if !seen.contains(n.id.as_str()) {
                    errs.push(GraphError::Unreachable(n.id.clone()));
                }
            }
            // success path alone must reach the terminal
            let mut cur = self.entry.as_str();
            let mut steps = 0;
            let reached = loop {
                if cur == self.terminal {
                    break true;
                }
                match self.node(cur).and_then(|n| n.on_success.as_deref()) {
                    Some(next) if steps <= self.nodes.len() => {
                        cur = next;
                        steps += 1;
                    }
                    _ => break false,
                }
            };
            if !reached {
                errs.push(GraphError::TerminalNotReached);
            }
        }
        errs
    }
}

fn node(id: &str, controller: ControllerBinding, next: Option<&str>, on_failure: FailurePolicy) -> TaskNode {
    TaskNode {
        id: id.into(),
        controller,
        on_success: next.map(Into::into),
        on_failure,
        qc: false,
    }
}

/// Motor soldering cycle: load, grasp, place, three insert/solder pairs,
/// tip cleaning, unload. The per-step split is a plausible guess that
/// averages about 159 s.
pub fn canonical_graph() -> TaskGraph {
    let retry = |n| FailurePolicy::Retry { attempts: n };
    let mut nodes = vec![
        node("load", ControllerBinding::HumanStep { duration_s: 12.0 }, Some("grasp"), FailurePolicy::AbortCycle),
        node("grasp", ControllerBinding::waypoint(10.0), Some("place"), retry(1)),
        node(
            "place",
            ControllerBinding::Servo {
                start_offset_m: 0.03,
                start_offset_deg: 10.0,
                error: ServoErrorModel {
                    translation_noise_m: 0.002,
                    rotation_noise_deg: 0.2,
                    ..ServoErrorModel::default()
                },
                config: ServoConfig::default(),
            },
            Some("fetch_1"),
            retry(2),
        ),
    ];
    for k in 1..=3 {
        let fetch = format!("fetch_{k}");
        let insert = format!("insert_{k}");
        let solder = format!("solder_{k}");
        let after = if k < 3 { format!("fetch_{}", k + 1) } else { "tip_clean".into() };
        nodes.push(node(
            &fetch,
            ControllerBinding::waypoint(13.0),
            Some(&insert),
            FailurePolicy::OperatorAlert { resolve_s: 60.0 },
        ));
        let mut ins = node(
            &insert,
            ControllerBinding::Policy {
                emulator: PolicyEmulator::default(),
                insert: InsertConfig {
                    step_period_s: 0.4,
                    retract_time_s: 1.0,
                    ..InsertConfig::default()
                },
                start_height_m: 0.03,
                hole_radius_m: 0.004,
                hole_sector_deg: 60.0,
                stuck_probability: Some(0.1),
            },
            Some(&solder),
            retry(3),
        );
        ins.qc = true;
        nodes.push(ins);
        nodes.push(node(&solder, ControllerBinding::waypoint(17.0), Some(&after), retry(1)));
    }
    nodes.push(node("tip_clean", ControllerBinding::waypoint(12.0), Some("unload"), retry(1)));
    nodes.push(node("unload", ControllerBinding::HumanStep { duration_s: 12.0 }, None, FailurePolicy::AbortCycle));
    TaskGraph {
        entry: "load".into(),
        terminal: "unload".into(),
        nodes,
    }
}

/// Single fixed-length step; handy for takt arithmetic.
pub fn fixed_graph(duration_s: f64) -> TaskGraph {
    TaskGraph {
        entry: "work".into(),
        terminal: "work".into(),
        nodes: vec![node("work", ControllerBinding::waypoint(duration_s), None, FailurePolicy::AbortCycle)],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_graph_is_valid() {
        let g = canonical_graph();
        assert_eq!(g.validate(), vec![]);
        let order: Vec<&str> = {
            let mut v = vec![];
            let mut cur = Some(g.entry.as_str());
            while let Some(id) = cur {
                v.push(id);
                cur = g.node(id).unwrap().on_success.as_deref();
            }
            v
        };
        assert_eq!(
            order,
            [
                "load", "grasp", "place", "fetch_1", "insert_1", "solder_1", "fetch_2", "insert_2", "solder_2",
                "fetch_3", "insert_3", "solder_3", "tip_clean", "unload"
            ]
        );
    }

    #[test]
    fn dangling_edge_detected() {
        let mut g = canonical_graph();
        g.nodes[1].on_success = Some("nowhere".into());
        let errs = g.validate();
        assert!(errs.contains(&GraphError::MissingNode {
            from: "grasp".into(),
            to: "nowhere".into()
        }));
    }

    #[test]
    fn zero_retry_self_loop_detected() {
        let mut g = canonical_graph();
        g.nodes[2].on_failure = FailurePolicy::Retry { attempts: 0 };
        assert!(g.validate().contains(&GraphError::ZeroProgress("place".into())));
        let mut g = canonical_graph();
        g.nodes[2].on_failure = FailurePolicy::Goto { node: "place".into() };
        assert!(g.validate().contains(&GraphError::ZeroProgress("place".into())));
    }

    #[test]
    fn orphans_and_multiple_errors_reported_together() {
        let mut g = canonical_graph();
        g.nodes.push(node("orphan", ControllerBinding::waypoint(1.0), Some("unload"), FailurePolicy::AbortCycle));
        g.nodes[0].on_success = Some("missing".into());
        let errs = g.validate();
        assert!(errs.contains(&GraphError::Unreachable("orphan".into())));
        assert!(errs.contains(&GraphError::TerminalNotReached));
        assert!(errs.len() >= 3);
    }

    #[test]
    fn graph_json_roundtrip() {
        let g = canonical_graph();
        let s = serde_json::to_string(&g).unwrap();
        let back: TaskGraph = serde_json::from_str(&s).unwrap();
        assert_eq!(back, g);
    }
}
