//! Ensemble runs.

pub mod config;
pub mod ensemble;
pub mod estimators;
pub mod moments;
pub mod report;

pub use config::{geometric_checkpoints, EnsembleConfig, Estimators, MdpConfig, DEFAULT_BLOCK_SIZE, DEFAULT_CHECKPOINTS};
pub use ensemble::{run_ensemble_data, run_ensemble_data_with, EnsembleData, Execution, FeatureLayout};
pub use estimators::{regress_msd_corrections, Estimate, MdpEstimate, RegressionFit};
pub use moments::RunningMoments;
pub use report::EnsembleReport;

use crate::error::Result;

/// Run the ensemble and summarise it.
pub fn run_ensemble(config: &EnsembleConfig) -> Result<EnsembleReport> {
    run_ensemble_with(config, Execution::default())
}

pub fn run_ensemble_with(config: &EnsembleConfig, execution: Execution) -> Result<EnsembleReport> {
    let data = run_ensemble_data_with(config, execution)?;
    Ok(EnsembleReport::build(config, &data))
}
