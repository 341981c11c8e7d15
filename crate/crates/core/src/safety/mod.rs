//! Voxel occupancy safety monitor: point clouds in, speed modes out.

pub mod energy;
pub mod grid;
pub mod monitor;
pub mod predict;
pub mod replay;
pub mod ssm;
pub mod zones;

pub use energy::{kinetic_report, BodyRegion, EnergyLimitTable, EnergyReport, EnergyRow, EnergyStatus};
pub use grid::{segment, voxelize, GridSpec, LabeledVoxelGrid, VoxelLabel, VoxelSet};
pub use monitor::{
    monitor_tick, read_decision_log, write_decision_log, DecisionRow, MonitorConfig, RobotSnapshot,
    SafetyMonitor, ZoneStrategy,
};
pub use predict::{
    baseline_predict, noisy_predict, BaselinePredictor, NoisyPredictor, OccupancyPredictor,
    PredictQuery, PredictorConfig,
};
pub use replay::{
    check_aligned, read_motion_log, read_scan_log, write_jsonl, MotionRecord, ScanRecord,
};
pub use ssm::{dynamic_zone_decide, protective_distance, LinkState, SsmParams};
pub use zones::{
    decide_mode, occupancy_ratio, SafetyDecision, SpeedMode, ZoneKind, ZoneMask, ZoneSpec,
    DEFAULT_THRESHOLD, SLOWDOWN_RATIO,
};
