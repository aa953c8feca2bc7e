//! Experiment orchestration for `mabeam`.
//!
//! A [`ScenarioConfig`] is read from TOML, run through one scheme, a worst-case
//! sweep, a Monte Carlo study or a gain map, and written out as CSV.

pub mod config;
pub mod error;
pub mod heatmap;
pub mod montecarlo;
pub mod output;
pub mod run;

pub use config::ScenarioConfig;
pub use error::{HarnessError, Result};
pub use heatmap::{heatmap, Heatmap, HeatmapGrid};
pub use montecarlo::{monte_carlo, DropDistribution, MonteCarloTable};
pub use run::{robust, run_scenario, RobustStudy, RunRecord, Scheme};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "MABEAM_OUT_DIR";
