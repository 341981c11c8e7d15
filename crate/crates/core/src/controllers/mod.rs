//! Controller primitives and their termination contracts.

mod outcome;
mod policy;
mod servo;
mod waypoint;

pub use outcome::{ControllerOutcome, ControllerStatus, Diagnostics, DEFAULT_TIMEOUT_S};
pub use policy::{
    insert_with_retry, policy_step, run_policy, InsertConfig, LoadCellModel, PolicyEmulator, PolicyStep,
    SuccessHead,
};
pub use servo::{servo_run, OracleError, ServoConfig, ServoErrorModel, ServoOracle, SimulatedServoOracle};
pub use waypoint::{validate_waypoints, waypoint_execute, SpeedProfile, Waypoint};
