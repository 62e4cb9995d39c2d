//! Steady-state power-system analysis.
//!
//! The crate is `no_std` (it needs `alloc`) and carries no IO. It covers:
//!
//! * [`network`]: case data model, validation and per-unit helpers
//! * [`ybus`]: bus admittance matrices for any sequence, tap transformers included
//! * [`powerflow`]: polar Newton-Raphson with reactive-limit switching
//! * [`analysis`]: branch flows, losses, loading and voltage reports
//! * [`fault`]: symmetrical-component short-circuit calculations and breaker sizing
//! * [`scenario`]: declarative what-if actions and parameter sweeps
//!
//! File formats and the command-line front end live in the `gridflow` crate.
#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod analysis;
pub mod cases;
pub mod fault;
pub mod network;
pub mod numerics;
pub mod powerflow;
pub mod scenario;
pub mod ybus;

use alloc::boxed::Box;
use alloc::string::String;

pub use network::{BusId, Network};
pub use numerics::Complex;
pub use powerflow::{NonConvergence, PowerFlowSolution, SolveOptions};
pub use ybus::{AdmittanceMatrix, Sequence};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("singular matrix: relative pivot {pivot:e} in column {column}")]
    SingularMatrix { column: usize, pivot: f64 },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("unknown bus {0}")]
    UnknownBus(BusId),
    #[error("{0}")]
    Validation(network::ValidationReport),
    #[error("not supported: {0}")]
    NotSupported(String),
    #[error("{0}")]
    NonConvergence(Box<NonConvergence>),
    #[error("singular Jacobian at iteration {iteration}")]
    SingularJacobian { iteration: usize },
    #[error("{0} sequence network is ungrounded (no path to the reference)")]
    UngroundedSystem(Sequence),
    #[error("no breaker rating covers {current_amps:.2} A (largest is {largest:.0} A)")]
    NoAdequateRating { current_amps: f64, largest: f64 },
    #[error("breaker catalog must be non-empty, finite and strictly ascending")]
    InvalidCatalog,
    #[error("action rejected: {0}")]
    ActionRejected(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
}
