//! Algorithmic statistics at desk scale.
//!
//! Everything here is computed relative to one fixed, deliberately
//! sub-universal prefix machine ([`pvm`], instruction set `PVM-1`) and a set
//! of enumeration [`Budgets`]. Within those bounds prefix complexity,
//! sufficient statistics, sophistication, structure functions and randomness
//! deficiency are computed exactly by exhaustive search.

pub mod bits;
pub mod cli;
pub mod enumerate;
pub mod models;
pub mod pvm;
pub mod search;
pub mod selftest;
pub mod stats;

pub use bits::Bits;
pub use pvm::{Budgets, Instr, Program};

use thiserror::Error;

/// Crate-level error collecting every module's failure modes.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Budget(#[from] pvm::BudgetError),
    #[error(transparent)]
    Enumerate(#[from] enumerate::EnumerateError),
    #[error(transparent)]
    Snapshot(#[from] enumerate::SnapshotError),
    #[error(transparent)]
    Stats(#[from] stats::StatsError),
    #[error(transparent)]
    Model(#[from] models::ModelError),
}
