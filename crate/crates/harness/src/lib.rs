//! Experiment harness for the MRE-NC estimator: TOML configs, seeded sweeps,
//! CSV output, the verification suite and the command-line front end.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod error;
pub mod experiment;
pub mod family;
pub mod oracle;
pub mod streams;
pub mod verify;

pub use config::{EstimatorKind, ExperimentConfig, FamilyKind, QuantizationKind};
pub use error::{HarnessError, Result};
pub use experiment::{run_experiment, write_csv, ExperimentRecord, Status};
