//! Experiments, verification runs and the `marw` command line.

pub mod checks;
pub mod error;
pub mod identities;
pub mod regime_map;
pub mod runner;
pub mod spec;

pub use error::{HarnessError, Result};
pub use runner::{bundled, run_spec, RunOptions, Verification};
pub use spec::{CheckKind, ExperimentSpec};
