//! Experiment driver for the W4 resetting protocol.
//!
//! An [`ExperimentConfig`] names a case, the protocol settings and one of
//! three run modes: an angle sweep, a random-unitary campaign or a single
//! run. [`run_case`] executes it, appending rows to `results.csv` (resuming
//! from whatever a previous run left there) and writing `summary.json` and
//! plot data. Every per-run seed is derived from the master seed, the case
//! and the run index, so output is byte-identical across runs and worker
//! counts.

pub mod calibrate;
pub mod config;
pub mod error;
pub mod plots;
pub mod results;
pub mod runner;

pub use calibrate::{calibrate_noise, Calibration, CalibrationTarget};
pub use config::{CaseId, ExperimentConfig, TomographySettings};
pub use error::{HarnessError, Result};
pub use results::ResultRow;
pub use runner::{run_case, with_workers, CaseReport, Summary};
