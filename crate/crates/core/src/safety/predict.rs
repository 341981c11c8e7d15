//! Occupancy predictors.
//!
//! The deployed monitor would put a learned model behind
//! [`OccupancyPredictor`]. Here the exact geometric baseline stands in for
//! it, and [`NoisyPredictor`] injects false positives and negatives on top
//! of any base predictor.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Geometric};
use serde::{Deserialize, Serialize};

use super::grid::{LabeledVoxelGrid, VoxelLabel, VoxelSet};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default)]
pub struct PredictQuery<'a> {
    /// Monitoring tick; keys per-tick randomness in noisy predictors.
    pub tick: u64,
    pub joint_state: &'a [f64],
}

pub trait OccupancyPredictor {
    /// Indices of voxels predicted to be occupied by external obstacles.
    fn predict(&self, grid: &LabeledVoxelGrid, query: &PredictQuery<'_>) -> VoxelSet;
}

/// Predicts exactly the voxels labeled obstacle.
#[derive(Debug, Clone, Copy, Default)]
pub struct BaselinePredictor;

pub fn baseline_predict(grid: &LabeledVoxelGrid) -> VoxelSet {
    grid.indices_with(VoxelLabel::Obstacle)
}

impl OccupancyPredictor for BaselinePredictor {
    fn predict(&self, grid: &LabeledVoxelGrid, _query: &PredictQuery<'_>) -> VoxelSet {
        baseline_predict(grid)
    }
}

#[derive(Debug, Clone)]
pub struct NoisyPredictor<P> {
    base: P,
    fp_rate: f64,
    fn_rate: f64,
    seed: u64,
}

/// Wraps `base`: each predicted voxel is dropped with probability `fn_rate`
/// and every other voxel is added with probability `fp_rate`.
pub fn noisy_predict<P: OccupancyPredictor>(
    base: P,
    fp_rate: f64,
    fn_rate: f64,
    seed: u64,
) -> Result<NoisyPredictor<P>> {
    for (name, r) in [("fp_rate", fp_rate), ("fn_rate", fn_rate)] {
        if !(0.0..=1.0).contains(&r) {
            return Err(Error::config(name, format!("{r} is not in [0, 1]")));
        }
    }
    Ok(NoisyPredictor {
        base,
        fp_rate,
        fn_rate,
        seed,
    })
}

impl<P: OccupancyPredictor> OccupancyPredictor for NoisyPredictor<P> {
    fn predict(&self, grid: &LabeledVoxelGrid, query: &PredictQuery<'_>) -> VoxelSet {
        let truth = self.base.predict(grid, query);
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(query.tick);

        let mut out: Vec<usize> = if self.fn_rate > 0.0 {
            truth
                .iter()
                .filter(|_| !rng.random_bool(self.fn_rate))
                .collect()
        } else {
            truth.as_slice().to_vec()
        };

        if self.fp_rate > 0.0 {
            let n = grid.labels().len();
            // gaps between Bernoulli successes are geometric, so only the
            // selected voxels cost anything
            let gap = Geometric::new(self.fp_rate).expect("rate checked at construction");
            let mut idx = 0usize;
            loop {
                let skip = gap.sample(&mut rng);
                idx = match usize::try_from(skip).ok().and_then(|s| idx.checked_add(s)) {
                    Some(i) if i < n => i,
                    _ => break,
                };
                if !truth.contains(idx) {
                    out.push(idx);
                }
                idx += 1;
            }
        }
        VoxelSet::from_unsorted(out)
    }
}

/// Serializable predictor selection for scenarios.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PredictorConfig {
    #[default]
    Baseline,
    Noisy {
        fp_rate: f64,
        fn_rate: f64,
        seed: u64,
    },
}

/// Boxed predictor built from a [`PredictorConfig`].
pub struct ConfiguredPredictor(Box<dyn OccupancyPredictor + Send + Sync>);

impl PredictorConfig {
    pub fn build(&self) -> Result<ConfiguredPredictor> {
        Ok(ConfiguredPredictor(match *self {
            PredictorConfig::Baseline => Box::new(BaselinePredictor),
            PredictorConfig::Noisy {
                fp_rate,
                fn_rate,
                seed,
            } => Box::new(noisy_predict(BaselinePredictor, fp_rate, fn_rate, seed)?),
        }))
    }

    pub fn is_exact(&self) -> bool {
        match *self {
            PredictorConfig::Baseline => true,
            PredictorConfig::Noisy {
                fp_rate, fn_rate, ..
            } => fp_rate == 0.0 && fn_rate == 0.0,
        }
    }
}

impl OccupancyPredictor for ConfiguredPredictor {
    fn predict(&self, grid: &LabeledVoxelGrid, query: &PredictQuery<'_>) -> VoxelSet {
        self.0.predict(grid, query)
    }
}
