//! Deterministic simulator and library for a collaborative robot workcell.
//!
//! The crate is organised bottom-up:
//!
//! * [`geometry`]: rigid transforms, cuboids, rays.
//! * [`safety`]: voxel occupancy monitor, speed modes, protective
//!   distances and kinetic-energy checks.
//! * [`controllers`]: visual servoing, chunked policy emulation with a
//!   success head, load-cell retries and waypoint playback.
//! * [`scheduler`]: the task graph state machine and per-cycle accounting.
//! * [`world`]: scripted robot, workers, obstacles, simulated LiDAR and
//!   the simulation clock.
//! * [`analysis`]: throughput projection, takt and percentile statistics,
//!   and offline comparison of safety strategies.
//!
//! Every source of randomness is seeded explicitly; identical inputs give
//! bit-identical outputs.

pub mod error;
pub mod geometry;
pub mod controllers;
pub mod safety;
pub mod scheduler;
pub mod seed;
pub mod world;
pub mod analysis;

pub use error::{Error, Result};
