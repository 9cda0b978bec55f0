//! Recovery-based solvency risk measures.
//!
//! The library evaluates Recovery V@R and Recovery AV@R (and their
//! liability-side variants) on weighted scenario samples, simulates a
//! parametric insurance balance sheet, computes recovery adjustments of
//! regulatory capital, calibrates level functions, allocates capital to
//! divisions and builds ReAV@R efficient frontiers with a simplex solver.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod allocation;
pub mod balance;
pub mod calibration;
pub mod error;
pub mod frontier;
pub mod io;
pub mod measures;
pub mod recadj;
pub mod recovery;
pub mod rng;
pub mod sample;
pub mod special;
pub mod stress;

pub use error::{Error, Result};
pub use measures::{reavar, revar, MeasureKind, RecoveryEvaluation};
pub use recovery::{LevelFunction, Piece, RecoveryFunction};
pub use sample::{avar_empirical, var_empirical, TailProfile, WeightedSample, Weights};
