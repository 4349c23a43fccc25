//! Solver library for the block-angular min-max resource sharing problem.
//!
//! Customers come with convex feasible-allocation blocks that are reached
//! only through (approximate) linear-minimization oracles. The library
//! computes a primal allocation whose maximum resource usage is within
//! (1+delta)*sigma of optimal together with a matching dual certificate,
//! using a phased multiplicative-price core algorithm and a restart-based
//! constant-factor preprocessing stage, plus an analysis toolkit that audits
//! the quantitative bounds of every run.

pub mod analysis;
pub mod core_solver;
pub mod error;
pub mod fileio;
pub mod gen;
pub mod model;
pub mod oracles;
pub mod scaling;

pub use error::{Error, Result};
pub use model::{
    dec_compare, l1_log, sorted_decreasing, AllocationVector, DecomposedSolution, DualCertificate,
    Instance, LocalDualityCert, NumericPolicy, PriceState, RunStats, WeightedAllocation,
};
