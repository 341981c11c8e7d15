//! Simulated cell: scripted robot, workers and obstacles, the LiDAR model
//! and the clock that ties them to the safety monitor.

mod actors;
mod lidar;
mod robot;
mod scenario;
mod sim;

pub use actors::{
    obstacle_at, spawn_random_obstacle, ObstacleConfig, ObstacleRanges, ObstacleScript, PathPoint, Spacing,
    VisitSchedule, WorkerScript,
};
pub use lidar::{Lidar, LidarModel, LidarRun, RayPattern};
pub use robot::{Keyframe, LinkScript, RobotModel, ToolScript, MIN_LINK_HEIGHT_M, TOOL_HEIGHT_RANGE_M};
pub use scenario::{default_lidar, default_robot, with_premature_success, Scenario, TORSO_HEIGHT_M};
pub use sim::{run_monitor, Clock, Frame, Recording, World, WorldSafety};
