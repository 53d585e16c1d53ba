//! Seeded Monte Carlo harness.
//!
//! Trial `t` of a sweep owns `SeedSpec::new(master_seed, t)`. The point
//! cloud, mask and noise streams are keyed by that seed alone, so every grid
//! point and every algorithm in trial `t` sees the same cloud and the same
//! underlying uniforms and normals (common random numbers). Records are
//! produced in parallel and emitted in `(trial, p, nu, algorithm)` order.

mod config;
mod report;
mod summary;
mod sweep;

pub use config::{Algorithm, CoordDist, ExperimentConfig, SCHEMA_VERSION};
pub use report::{
    records_to_csv, render_svg, summary_to_csv, write_outputs, OutputFormat, RunMeta,
};
pub use summary::{aggregate, Stats, SummaryRow};
pub use sweep::{run_sweep, run_trial, TrialRecord};
