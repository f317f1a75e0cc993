//! Steady-state and transient assessment of a datacenter supplied by a
//! small modular reactor and battery storage, interconnected with a
//! transmission grid.
//!
//! The crate is organised along the workflow: [`datacenter`] turns workload
//! traces into a 5-minute demand profile, [`powerflow`] solves each snapshot
//! on a [`grid`] case, [`dynamics`] runs fixed-step transient simulations
//! from a converged snapshot, and [`scenario`] pairs grid-only and
//! IES-backed runs under identical contingencies.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod datacenter;
pub mod dynamics;
pub mod error;
pub mod grid;
pub mod powerflow;
pub mod scenario;

pub use error::{Error, Result};
