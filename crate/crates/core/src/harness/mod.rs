//! Monte-Carlo driver: scenario generation, the three estimators, NMSE and
//! result files.

pub mod config;
pub mod metrics;
pub mod output;
pub mod sweep;

pub use config::{Estimator, ExperimentConfig, Preset};
pub use metrics::{nmse, NMSE_FLOOR_DB};
pub use output::emit_results;
pub use sweep::{run_trial, sweep_frames, sweep_snr, SweepResult, TrialResult};
