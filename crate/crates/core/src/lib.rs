//! Simulation and verification toolkit for the W4 quantum resetting protocol.
//!
//! A qubit target interacts in turn with four qubit probes prepared as two
//! singlets. Projecting the probes onto a fixed six-dimensional success
//! subspace returns the target to the state it had before its free evolution.
//!
//! The crate is split along the pipeline:
//!
//! - [`linalg`]: dense complex states and operators, partial trace, distances.
//! - [`circuit`]: gate IR, layer scheduling, SWAP/singlet/interaction compilation.
//! - [`noise`]: amplitude-damping and dephasing channels applied per layer.
//! - [`protocol`]: the 5-qubit circuit, success projector and reset metrics.
//! - [`tomography`]: sampled state tomography, single-qubit process tomography,
//!   CP/CPTP projection and bootstrap error bars.
//!
//! Qubit 0 is always the most-significant bit of a computational-basis index.

pub mod circuit;
pub mod error;
pub mod linalg;
pub mod noise;
pub mod numfmt;
pub mod protocol;
pub mod seed;
pub mod tomography;

pub use error::{Error, Result};
pub use linalg::{DensityMatrix, Operator, StateVector, C64};
