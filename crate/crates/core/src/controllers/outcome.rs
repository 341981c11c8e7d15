use serde::{Deserialize, Serialize};

/// Default wall-clock budget for a single controller invocation, s.
pub const DEFAULT_TIMEOUT_S: f64 = 20.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControllerStatus {
    Running,
    Succeeded,
    Failed,
}

impl ControllerStatus {
    pub fn is_terminal(self) -> bool {
        !matches!(self, ControllerStatus::Running)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub final_translation_m: Option<f64>,
    pub final_rotation_deg: Option<f64>,
    pub success_prob: Option<f64>,
    pub retries: u32,
    /// Retraction distances drawn after each stuck event, m.
    pub retractions_m: Vec<f64>,
    /// Success was signalled before the task was actually complete.
    pub premature: bool,
    pub message: Option<String>,
}

/// What every controller hands back to the scheduler.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControllerOutcome {
    pub status: ControllerStatus,
    pub iterations: u32,
    /// Execution time, s. Nominal (speed ratio 1) unless a speed profile was
    /// supplied.
    pub elapsed_s: f64,
    pub diagnostics: Diagnostics,
}

impl ControllerOutcome {
    pub fn succeeded(&self) -> bool {
        self.status == ControllerStatus::Succeeded
    }
}
