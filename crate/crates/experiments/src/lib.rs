//! Parameter sweeps that measure the constants and exponents of weak-type,
//! `L^p` and kernel estimates for Schrodinger groups on discrete tori.
//!
//! Every experiment takes an [`ExperimentConfig`] and returns an
//! [`ExperimentReport`] whose rows are ordered by parameter tuple, so a
//! report is a deterministic function of its configuration.

pub mod besov_check;
pub mod config;
pub mod error;
pub mod kernels;
pub mod probes;
pub mod report;
pub mod sharpness;
pub mod suite;
pub mod sweeps;

pub use config::{ExperimentConfig, Kind, OperatorSpec, ProbeSpec};
pub use error::{ExperimentError, Result};
pub use report::{Check, ExperimentReport, Plot, Row};
pub use suite::{reduced, run, selfcheck_configs};
