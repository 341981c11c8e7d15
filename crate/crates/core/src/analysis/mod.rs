//! Throughput projections, cycle statistics and offline replay of safety
//! strategies.

mod projection;
mod replay;
mod stats;

pub use projection::{
    crossover, lasting_crossover, project_shift, series_from_completions, write_series_csv, BreakSchedule,
    ModelKind, TimingModel, EFFECTIVE_TAKT_S, HUMAN_TAKT_S, ROBOT_TAKT_S,
};
pub use replay::{
    dilation, margin_region, replay_compare, replay_strategy, ProductivityReport, Strategy, StrategyRow,
    DEFAULT_MARGIN_M,
};
pub use stats::{binomial_band, cycle_percentiles, effective_takt, nearest_rank, shift_takt};
