//! Explicit task state machine over controller primitives, with fallback
//! policies and per-cycle time accounting.

mod graph;
mod run;

pub use graph::{canonical_graph, fixed_graph, ControllerBinding, FailurePolicy, GraphError, TaskGraph, TaskNode};
pub use run::{
    ensure_valid, execute_binding, run_cycle, run_shift, write_cycle_csv, write_event_csv, CycleOutcome,
    CycleRecord, NodeEvent, SafetySource, ScriptedEvent, ScriptedSafety, ShiftResult,
};
