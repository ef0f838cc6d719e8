//! Core algorithms for one-shot distributed minimization of Lipschitz losses
//! under a per-machine bit budget.
//!
//! The crate is `no_std` (with `alloc`). Every randomized routine takes an
//! explicit RNG, so callers control seeding and stream separation.
//!
//! Modules:
//! - [`grids`]: the hierarchy of dyadic grids on `[-1, 1]^d`.
//! - [`functions`]: loss-function abstractions and the concrete families.
//! - [`lattice`]: exhaustive lattice minimization inside axis-aligned boxes.
//! - [`encoder`]: machine-side sub-signal construction, quantization and bit packing.
//! - [`server`]: redundancy elimination, loss-surface reconstruction, and baselines.
//! - [`coinflip`]: the biased-coin identification testbed and its exact information tools.
//! - [`bounds`]: closed-form error bounds and regime checks.

#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod bounds;
pub mod coinflip;
pub mod encoder;
mod error;
pub mod functions;
pub mod grids;
pub mod lattice;
mod math;
pub mod server;

pub use error::{Error, Result};
