//! Reforestation planning and carbon-offset forecasting.
//!
//! The crate turns detector output over satellite imagery into land-area
//! estimates, recommends tree species for a soil/climate key, converts area
//! into tree counts and labor, and projects sector CO₂ emissions (forecast
//! with Holt-Winters smoothing) against the sequestration of the planted
//! trees.
//!
//! Modules follow the pipeline order:
//!
//! - [`emissions`]: sector emission tables and train/test splits
//! - [`forecast`]: exponential smoothing, parameter fitting, backtest metrics
//! - [`detection`]: label files, pixel-to-area conversion, image-level metrics
//! - [`species`]: knowledge base, keyed retrieval, recommendations, profiles
//! - [`planner`]: tree counts, labor force, growth timelines
//! - [`offset`]: net-emission projections
//! - [`scenario`]: declarative scenario configuration and pipeline stages

pub mod classification;
pub mod detection;
pub mod emissions;
pub mod forecast;
pub mod numeric;
pub mod offset;
pub mod planner;
pub mod scenario;
pub mod species;

pub use emissions::{EmissionsDataset, Observation, Sector, SectorSeries};
pub use forecast::{BacktestReport, SmoothingParams, SmoothingState};
pub use offset::OffsetProjection;
pub use planner::{GrowthTimeline, LaborPolicy, PlantingPlan};
