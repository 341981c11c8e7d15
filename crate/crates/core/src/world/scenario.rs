use serde::{Deserialize, Serialize};

use super::actors::{ObstacleConfig, PathPoint, Spacing, WorkerScript};
use super::lidar::{LidarModel, RayPattern};
use super::robot::{Keyframe, LinkScript, RobotModel, ToolScript};
use crate::error::{Error, Result};
use crate::geometry::{Cuboid, Pose, Vec3};
use crate::safety::MonitorConfig;
use crate::scheduler::{canonical_graph, ensure_valid, ControllerBinding, TaskGraph};

/// Workers shorter than this are treated as torso-height and must be
/// declared as such when they enter a zone, m.
pub const TORSO_HEIGHT_M: f64 = 1.2;

fn default_dt() -> f64 {
    0.1
}

fn default_gate() -> f64 {
    0.3
}

/// Everything needed to reproduce a run. Units are SI throughout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    pub seed: u64,
    #[serde(default = "default_dt")]
    pub dt_s: f64,
    pub duration_s: f64,
    pub monitor: MonitorConfig,
    pub robot: RobotModel,
    #[serde(default)]
    pub workers: Vec<WorkerScript>,
    #[serde(default)]
    pub obstacles: ObstacleConfig,
    pub lidar: LidarModel,
    pub task: TaskGraph,
    /// Allows workers shorter than [`TORSO_HEIGHT_M`] inside zones.
    #[serde(default)]
    pub torso_height_workers: bool,
    /// External boxes farther than this from the grid do not trigger a scan.
    #[serde(default = "default_gate")]
    pub scan_gate_margin_m: f64,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt_s > 0.0) {
            return Err(Error::config("dt_s", "must be > 0"));
        }
        if (self.dt_s - self.monitor.ssm.cycle_dt).abs() > 1e-12 {
            return Err(Error::config("dt_s", "must equal the monitoring cycle monitor.ssm.cycle_dt"));
        }
        if !(self.duration_s > 0.0 && self.duration_s.is_finite()) {
            return Err(Error::config("duration_s", "must be > 0"));
        }
        if !(self.scan_gate_margin_m >= 0.0) {
            return Err(Error::config("scan_gate_margin_m", "must be >= 0"));
        }
        self.monitor.validate()?;
        self.robot.validate()?;
        self.lidar.validate()?;
        self.obstacles.validate()?;
        ensure_valid(&self.task)?;
        let zones = [self.monitor.stop_zone.region, self.monitor.slowdown_zone.region];
        for (i, w) in self.workers.iter().enumerate() {
            w.validate(i)?;
            if w.top_z() < TORSO_HEIGHT_M && !self.torso_height_workers {
                let enters = w.path.iter().any(|p| {
                    let b = Cuboid::axis_aligned(p.center, w.half_extents).aabb();
                    zones.iter().any(|z| z.intersects(&b))
                });
                if enters {
                    return Err(Error::config(
                        format!("workers[{i}]"),
                        format!(
                            "top at {:.2} m enters a zone; set torso_height_workers to allow this",
                            w.top_z()
                        ),
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> std::result::Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    pub const PRESETS: [&'static str; 3] = ["factory", "intrusion", "replay_demo"];

    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "factory" => Some(Self::factory()),
            "intrusion" => Some(Self::intrusion()),
            "replay_demo" => Some(Self::replay_demo()),
            _ => None,
        }
    }

    /// A 5 h 10 min shift with a material-handling worker every 10 to
    /// 20 minutes who leans into the stop zone for about a minute.
    pub fn factory() -> Self {
        let dwell = 66.0;
        let mut lidar = default_lidar();
        lidar.pattern = RayPattern {
            azimuth_step_deg: 1.0,
            elevation_step_deg: 1.0,
            ..RayPattern::default()
        };
        Self {
            name: "factory".into(),
            duration_s: 18_600.0,
            workers: vec![WorkerScript {
                first_visit_s: 600.0,
                spacing: Spacing::Uniform { lo: 600.0, hi: 1200.0 },
                max_visits: None,
                ..front_worker(&[(0.0, FAR_FACE_Y), (2.4, -0.88), (2.4 + dwell, -0.88), (4.8 + dwell, FAR_FACE_Y)])
            }],
            lidar,
            task: with_premature_success(canonical_graph(), 2.0 / 324.0),
            ..Self::base("factory")
        }
    }

    /// One approach, a short stop-zone dwell and a retreat.
    pub fn intrusion() -> Self {
        Self {
            duration_s: 12.0,
            workers: vec![front_worker(&[(0.0, FAR_FACE_Y), (2.4, -0.88), (7.4, -0.88), (9.8, FAR_FACE_Y)])],
            ..Self::base("intrusion")
        }
    }

    /// One visit that pauses at three depths: close to the arms, inside the
    /// fixed table margin, and in the slowdown zone only.
    pub fn replay_demo() -> Self {
        let mut lidar = default_lidar();
        // a fan facing the front of the table keeps the bundled logs small
        lidar.pattern = RayPattern {
            azimuth_deg: (-150.0, -60.0),
            azimuth_step_deg: 2.0,
            elevation_deg: (-15.0, 15.0),
            elevation_step_deg: 2.0,
        };
        Self {
            duration_s: 20.0,
            workers: vec![front_worker(&[
                (0.0, FAR_FACE_Y),
                (2.4, -1.03),
                (6.4, -1.03),
                (6.6, -1.15),
                (12.6, -1.15),
                (12.9, -1.30),
                (14.9, -1.30),
                (17.4, FAR_FACE_Y),
            ])],
            lidar,
            ..Self::base("replay_demo")
        }
    }

    fn base(name: &str) -> Self {
        Self {
            name: name.into(),
            seed: 7,
            dt_s: 0.1,
            duration_s: 60.0,
            monitor: MonitorConfig::default(),
            robot: default_robot(),
            workers: Vec::new(),
            obstacles: ObstacleConfig::default(),
            lidar: default_lidar(),
            task: canonical_graph(),
            torso_height_workers: false,
            scan_gate_margin_m: default_gate(),
        }
    }
}

/// Sets the premature-success probability of every policy insertion.
pub fn with_premature_success(mut graph: TaskGraph, p: f64) -> TaskGraph {
    for n in graph.nodes.iter_mut() {
        if let ControllerBinding::Policy { insert, .. } = &mut n.controller {
            insert.premature_success_prob = p;
        }
    }
    graph
}

const WORKER_HALF: [f64; 3] = [0.25, 0.15, 0.85];
const WORKER_X: f64 = -0.1;
const FAR_FACE_Y: f64 = -2.3;

/// Worker approaching the front edge of the table; `(t, y)` pairs give the
/// y coordinate of the worker's front face.
fn front_worker(face: &[(f64, f64)]) -> WorkerScript {
    WorkerScript {
        name: "operator".into(),
        half_extents: Vec3::from(WORKER_HALF),
        path: face
            .iter()
            .map(|&(t, y)| PathPoint {
                t_s: t,
                center: Vec3::new(WORKER_X, y - WORKER_HALF[1], WORKER_HALF[2]),
            })
            .collect(),
        first_visit_s: 1.0,
        spacing: Spacing::Fixed { s: 1000.0 },
        max_visits: Some(1),
    }
}

pub fn default_lidar() -> LidarModel {
    LidarModel::new(Pose::from_translation(0.45, 0.8, 1.3), RayPattern::default())
}

fn link(name: &str, half: [f64; 3], keys: &[(f64, [f64; 3])], mass: f64) -> LinkScript {
    LinkScript {
        name: name.into(),
        half_extents: Vec3::from(half),
        keyframes: keys
            .iter()
            .map(|&(t, p)| Keyframe {
                t_s: t,
                pose: Pose::from_translation(p[0], p[1], p[2]),
            })
            .collect(),
        mass_kg: mass,
    }
}

/// Dual-arm robot behind a table whose top matches the stop-zone
/// footprint. The arms sweep towards the front edge and back every 20 s.
pub fn default_robot() -> RobotModel {
    let upper = [0.05, 0.15, 0.05];
    let fore = [0.04, 0.12, 0.04];
    RobotModel {
        fixtures: vec![
            // table, top at 0.85 m
            Cuboid::axis_aligned(Vec3::new(-0.1, -0.175, 0.425), Vec3::new(0.45, 0.825, 0.425)),
            // torso
            Cuboid::axis_aligned(Vec3::new(-0.1, 0.5, 1.2), Vec3::new(0.15, 0.1, 0.35)),
        ],
        links: vec![
            link(
                "right_upper",
                upper,
                &[(0.0, [0.1, 0.2, 1.25]), (5.0, [0.08, -0.15, 1.2]), (12.0, [0.05, 0.0, 1.25])],
                3.0,
            ),
            link(
                "right_fore",
                fore,
                &[
                    (0.0, [0.1, -0.1, 1.1]),
                    (5.0, [0.05, -0.6, 1.05]),
                    (10.0, [-0.05, -0.45, 1.1]),
                    (15.0, [0.1, -0.2, 1.15]),
                ],
                2.0,
            ),
            link(
                "left_upper",
                upper,
                &[(0.0, [-0.3, 0.2, 1.25]), (8.0, [-0.3, -0.1, 1.2]), (14.0, [-0.28, 0.05, 1.25])],
                3.0,
            ),
            link(
                "left_fore",
                fore,
                &[
                    (0.0, [-0.3, -0.1, 1.1]),
                    (8.0, [-0.35, -0.55, 1.05]),
                    (13.0, [-0.25, -0.3, 1.15]),
                    (17.0, [-0.3, -0.15, 1.1]),
                ],
                2.0,
            ),
        ],
        tool: Some(ToolScript {
            link: 1,
            offset: Pose::from_translation(0.0, -0.14, -0.05),
            half_extents: Vec3::new(0.01, 0.02, 0.04),
        }),
        period_s: 20.0,
    }
}
