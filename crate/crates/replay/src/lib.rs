//! Offline companion to the fusion/costmap library: scenario files, on-disk
//! frame bundles, sequence generation, replay scoring, and CSV reports.

pub mod bundle;
pub mod pipeline;
pub mod presets;
pub mod report;
pub mod scenario;

pub use bundle::{load_bundle, Bundle};
pub use pipeline::{generate_sequence, run_depth_eval, run_replay, PipelineError};
pub use scenario::{ConfigName, Scenario};
