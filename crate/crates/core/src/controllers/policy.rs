//! Chunked-action policy emulation with a success head, and the load-cell
//! retry loop used for cable insertion.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::outcome::{ControllerOutcome, ControllerStatus, Diagnostics, DEFAULT_TIMEOUT_S};
use crate::error::{Error, Result};
use crate::geometry::{Pose, RelativeMotion, Vec3};

/// Logistic success probability in the distance to the target:
/// `p(d) = 1 / (1 + exp(sharpness · (d − midpoint)))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SuccessHead {
    pub sharpness_per_m: f64,
    pub midpoint_m: f64,
}

impl Default for SuccessHead {
    fn default() -> Self {
        Self {
            sharpness_per_m: 2000.0,
            midpoint_m: 0.002,
        }
    }
}

impl SuccessHead {
    pub fn probability(&self, distance_m: f64) -> f64 {
        1.0 / (1.0 + (self.sharpness_per_m * (distance_m - self.midpoint_m)).exp())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolicyEmulator {
    /// Goal position standing in for the hole, m.
    pub target: Vec3,
    pub chunk_size: usize,
    /// Largest translation of one action, m.
    pub step_scale_m: f64,
    pub success_head: SuccessHead,
    pub success_threshold: f64,
    /// Standard deviation of per-action Gaussian jitter, m.
    #[serde(default)]
    pub action_noise_m: f64,
}

impl Default for PolicyEmulator {
    fn default() -> Self {
        Self {
            target: Vec3::zeros(),
            chunk_size: 5,
            step_scale_m: 0.002,
            success_head: SuccessHead::default(),
            success_threshold: 0.95,
            action_noise_m: 0.0,
        }
    }
}

impl PolicyEmulator {
    pub fn validate(&self) -> Result<()> {
        if self.chunk_size == 0 {
            return Err(Error::config("policy.chunk_size", "must be >= 1"));
        }
        if !(self.step_scale_m > 0.0) {
            return Err(Error::config("policy.step_scale_m", "must be > 0"));
        }
        if !(0.0..=1.0).contains(&self.success_threshold) {
            return Err(Error::config("policy.success_threshold", "must be in [0, 1]"));
        }
        if self.success_head.probability(0.0) <= self.success_threshold {
            return Err(Error::config(
                "policy.success_head",
                "probability at the target must exceed the success threshold",
            ));
        }
        Ok(())
    }

    pub fn success_prob(&self, state: &Vec3) -> f64 {
        self.success_head.probability((self.target - state).norm())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyStep {
    /// Relative translations; rotation is always identity.
    pub actions: Vec<RelativeMotion>,
    pub success_prob: f64,
}

/// One inference: a chunk of straight-line steps toward the target and the
/// success probability at `state`.
pub fn policy_step<R: Rng + ?Sized>(state: &Vec3, emu: &PolicyEmulator, rng: &mut R) -> PolicyStep {
    let noise = (emu.action_noise_m > 0.0).then(|| Normal::new(0.0, emu.action_noise_m).unwrap());
    let mut pos = *state;
    let mut actions = Vec::with_capacity(emu.chunk_size);
    for _ in 0..emu.chunk_size {
        let mut step = emu.target - pos;
        if let Some(n) = &noise {
            step += Vec3::new(n.sample(rng), n.sample(rng), n.sample(rng));
        }
        let len = step.norm();
        if len > emu.step_scale_m {
            step *= emu.step_scale_m / len;
        }
        pos += step;
        actions.push(RelativeMotion {
            delta: Pose::from_translation(step.x, step.y, step.z),
        });
    }
    PolicyStep {
        actions,
        success_prob: emu.success_prob(state),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LoadCellModel {
    /// Probability that a descent attempt jams.
    pub stuck_probability: f64,
    /// Reading above which the cable is considered stuck, N.
    pub force_threshold_n: f64,
    pub seed: u64,
}

impl LoadCellModel {
    pub fn new(stuck_probability: f64, seed: u64) -> Self {
        Self {
            stuck_probability,
            force_threshold_n: 5.0,
            seed,
        }
    }

    /// Simulated force reading for a jammed or free descent.
    pub fn reading(&self, stuck: bool) -> f64 {
        if stuck {
            1.5 * self.force_threshold_n
        } else {
            0.2 * self.force_threshold_n
        }
    }

    pub fn detects(&self, reading_n: f64) -> bool {
        reading_n > self.force_threshold_n
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InsertConfig {
    /// Upward retraction after a jam is drawn uniformly from this range, m.
    pub retract_range_m: (f64, f64),
    /// Jams tolerated before giving up; `None` retries forever.
    pub max_retries: Option<u32>,
    /// Execution time of one action, s.
    pub step_period_s: f64,
    /// Time spent on one retraction, s.
    pub retract_time_s: f64,
    /// Distance to the target at which a descent attempt meets the hole, m.
    pub contact_distance_m: f64,
    /// Probability that the success head fires as soon as contact is made.
    #[serde(default)]
    pub premature_success_prob: f64,
    pub timeout_s: f64,
}

impl Default for InsertConfig {
    fn default() -> Self {
        Self {
            retract_range_m: (0.0025, 0.004),
            max_retries: Some(5),
            step_period_s: 0.05,
            retract_time_s: 0.5,
            contact_distance_m: 0.002,
            premature_success_prob: 0.0,
            timeout_s: DEFAULT_TIMEOUT_S,
        }
    }
}

impl InsertConfig {
    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.retract_range_m;
        if !(0.0 <= lo && lo <= hi) {
            return Err(Error::config("insert.retract_range_m", "need 0 <= lo <= hi"));
        }
        if lo <= self.contact_distance_m && hi > 0.0 {
            return Err(Error::config(
                "insert.retract_range_m",
                "retraction must clear the contact distance",
            ));
        }
        if !(self.step_period_s > 0.0) {
            return Err(Error::config("insert.step_period_s", "must be > 0"));
        }
        if !(0.0..=1.0).contains(&self.premature_success_prob) {
            return Err(Error::config("insert.premature_success_prob", "must be in [0, 1]"));
        }
        Ok(())
    }
}

/// Runs policy chunks from `start` until the success head exceeds its
/// threshold. Each descent that reaches the contact distance may jam; a jam
/// retracts the tool upward and starts a new descent.
pub fn insert_with_retry(
    start: Vec3,
    emu: &PolicyEmulator,
    load: Option<&LoadCellModel>,
    cfg: &InsertConfig,
) -> ControllerOutcome {
    let seed = load.map_or(0, |l| l.seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let premature = cfg.premature_success_prob > 0.0 && rng.random_bool(cfg.premature_success_prob);

    let mut pos = start;
    let mut elapsed = 0.0;
    let mut chunks = 0u32;
    let mut armed = true;
    let mut diag = Diagnostics::default();

    let finish = |status, chunks, elapsed, mut diag: Diagnostics, pos: &Vec3| {
        diag.success_prob = Some(emu.success_prob(pos));
        diag.final_translation_m = Some((emu.target - pos).norm());
        ControllerOutcome {
            status,
            iterations: chunks,
            elapsed_s: elapsed,
            diagnostics: diag,
        }
    };

    loop {
        let step = policy_step(&pos, emu, &mut rng);
        if step.success_prob > emu.success_threshold {
            return finish(ControllerStatus::Succeeded, chunks, elapsed, diag, &pos);
        }
        chunks += 1;
        for a in &step.actions {
            pos += a.delta.translation;
            elapsed += cfg.step_period_s;
            if !armed || (emu.target - pos).norm() > cfg.contact_distance_m + 1e-9 {
                continue;
            }
            armed = false;
            if premature {
                diag.premature = true;
                return finish(ControllerStatus::Succeeded, chunks, elapsed, diag, &pos);
            }
            let stuck = load.is_some_and(|l| {
                let jam = rng.random_bool(l.stuck_probability.clamp(0.0, 1.0));
                l.detects(l.reading(jam))
            });
            if stuck {
                diag.retries += 1;
                if cfg.max_retries.is_some_and(|m| diag.retries > m) {
                    diag.message = Some("insertion stuck, retry budget exhausted".into());
                    return finish(ControllerStatus::Failed, chunks, elapsed, diag, &pos);
                }
                let (lo, hi) = cfg.retract_range_m;
                let r = if hi > lo { rng.random_range(lo..=hi) } else { lo };
                diag.retractions_m.push(r);
                pos.z += r;
                elapsed += cfg.retract_time_s;
                armed = true;
                // remaining actions of this chunk were planned before the jam
                break;
            }
        }
        if elapsed > cfg.timeout_s {
            diag.message = Some("timeout".into());
            return finish(ControllerStatus::Failed, chunks, elapsed, diag, &pos);
        }
    }
}

/// Policy execution without a load cell (e.g. soldering).
pub fn run_policy(start: Vec3, emu: &PolicyEmulator, cfg: &InsertConfig, seed: u64) -> ControllerOutcome {
    let load = LoadCellModel::new(0.0, seed);
    insert_with_retry(start, emu, Some(&load), cfg)
}
