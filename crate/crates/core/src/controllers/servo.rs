//! Iterative visual servoing against a pose oracle.
//!
//! The oracle replaces the learned estimator: it reports the corrective
//! motion `current⁻¹ target`, optionally corrupted by a bias, bounded noise,
//! or outright loss of the target.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::outcome::{ControllerOutcome, ControllerStatus, Diagnostics, DEFAULT_TIMEOUT_S};
use crate::geometry::{relative, Pose, RelativeMotion, Vec3};

#[derive(Debug, Clone, Error, PartialEq)]
#[error("servo oracle failure: {0}")]
pub struct OracleError(pub String);

pub trait ServoOracle {
    fn observe(&mut self, current: &Pose) -> Result<RelativeMotion, OracleError>;
}

/// Observation error applied by [`SimulatedServoOracle`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct ServoErrorModel {
    /// Constant translation offset in the moving frame, m.
    #[serde(default)]
    pub translation_bias_m: [f64; 3],
    /// Flip the sign of the bias on every observation.
    #[serde(default)]
    pub alternate_bias: bool,
    /// Radius of the ball from which translation noise is drawn, m.
    #[serde(default)]
    pub translation_noise_m: f64,
    /// Upper bound of the rotation noise angle, degrees.
    #[serde(default)]
    pub rotation_noise_deg: f64,
    /// Per-observation probability that the target is lost.
    #[serde(default)]
    pub lost_probability: f64,
}

impl ServoErrorModel {
    pub fn exact() -> Self {
        Self::default()
    }

    pub fn scaled(&self, k: f64) -> Self {
        Self {
            translation_bias_m: self.translation_bias_m.map(|b| b * k),
            translation_noise_m: self.translation_noise_m * k,
            rotation_noise_deg: self.rotation_noise_deg * k,
            ..*self
        }
    }
}

#[derive(Debug, Clone)]
pub struct SimulatedServoOracle {
    target: Pose,
    model: ServoErrorModel,
    rng: ChaCha8Rng,
    observations: u64,
}

impl SimulatedServoOracle {
    pub fn new(target: Pose, model: ServoErrorModel, seed: u64) -> Self {
        Self {
            target,
            model,
            rng: ChaCha8Rng::seed_from_u64(seed),
            observations: 0,
        }
    }

    pub fn target(&self) -> &Pose {
        &self.target
    }

    fn unit_vector(&mut self) -> Vec3 {
        loop {
            let v = Vec3::new(
                self.rng.sample(StandardNormal),
                self.rng.sample(StandardNormal),
                self.rng.sample(StandardNormal),
            );
            let n = v.norm();
            if n > 1e-12 {
                return v / n;
            }
        }
    }
}

impl ServoOracle for SimulatedServoOracle {
    fn observe(&mut self, current: &Pose) -> Result<RelativeMotion, OracleError> {
        let m = self.model;
        self.observations += 1;
        if m.lost_probability > 0.0 && self.rng.random_bool(m.lost_probability.min(1.0)) {
            return Err(OracleError("target lost".into()));
        }
        let mut obs = relative(current, &self.target);

        let sign = if m.alternate_bias && self.observations % 2 == 0 {
            -1.0
        } else {
            1.0
        };
        obs.delta.translation += Vec3::from(m.translation_bias_m) * sign;
        if m.translation_noise_m > 0.0 {
            let dir = self.unit_vector();
            // uniform in the ball
            let r = m.translation_noise_m * self.rng.random::<f64>().cbrt();
            obs.delta.translation += dir * r;
        }
        if m.rotation_noise_deg > 0.0 {
            let axis = self.unit_vector();
            let angle = (m.rotation_noise_deg * self.rng.random::<f64>()).to_radians();
            obs.delta.rotation = Pose::from_axis_angle(&axis, angle).rotation * obs.delta.rotation;
        }
        Ok(obs)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ServoConfig {
    pub pos_tol_m: f64,
    pub rot_tol_deg: f64,
    pub max_iters: u32,
    /// Inference plus motion time of one iteration, s.
    pub iteration_time_s: f64,
    pub timeout_s: f64,
}

impl Default for ServoConfig {
    fn default() -> Self {
        Self {
            pos_tol_m: 0.005,
            rot_tol_deg: 0.5,
            max_iters: 10,
            iteration_time_s: 2.0,
            timeout_s: DEFAULT_TIMEOUT_S,
        }
    }
}

/// Move to `current ∘ observation` until an observation falls below both
/// tolerances. The confirming observation counts as an iteration.
pub fn servo_run(
    start: Pose,
    oracle: &mut dyn ServoOracle,
    cfg: &ServoConfig,
) -> (ControllerOutcome, Pose) {
    let mut current = start;
    let mut elapsed = 0.0;
    let mut diag = Diagnostics::default();
    let max_iters = cfg.max_iters.max(1);

    for iter in 1..=max_iters {
        elapsed += cfg.iteration_time_s;
        let obs = match oracle.observe(&current) {
            Ok(o) => o,
            Err(e) => {
                diag.message = Some(e.to_string());
                return (
                    ControllerOutcome {
                        status: ControllerStatus::Failed,
                        iterations: iter,
                        elapsed_s: elapsed,
                        diagnostics: diag,
                    },
                    current,
                );
            }
        };
        let n = obs.norms();
        diag.final_translation_m = Some(n.translation_m);
        diag.final_rotation_deg = Some(n.rotation_deg);
        if n.translation_m < cfg.pos_tol_m && n.rotation_deg < cfg.rot_tol_deg {
            return (
                ControllerOutcome {
                    status: ControllerStatus::Succeeded,
                    iterations: iter,
                    elapsed_s: elapsed,
                    diagnostics: diag,
                },
                current,
            );
        }
        if elapsed >= cfg.timeout_s {
            diag.message = Some("timeout".into());
            return (
                ControllerOutcome {
                    status: ControllerStatus::Failed,
                    iterations: iter,
                    elapsed_s: elapsed,
                    diagnostics: diag,
                },
                current,
            );
        }
        current = current.compose(&obs.delta);
    }
    diag.message = Some("max iterations reached".into());
    (
        ControllerOutcome {
            status: ControllerStatus::Failed,
            iterations: max_iters,
            elapsed_s: elapsed,
            diagnostics: diag,
        },
        current,
    )
}
