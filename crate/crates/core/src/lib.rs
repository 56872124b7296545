//! Time-optimal control of spectrally reduced 1D heat equations.
//!
//! The heat equation `y_t = y_xx + χ_ω u` on `(0, L)` with Dirichlet
//! conditions is projected onto its first `m` sine modes. The crate decides
//! whether the projected state can be steered to zero under box-constrained
//! controls, computes minimal times and optimal controls, checks the
//! bang-bang property and scans for control-region augmentations that make
//! every coupling nonzero.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bangbang;
pub mod cli;
mod error;
pub mod exp_sum;
pub mod genericity;
pub mod reduced_system;
pub mod simulator;
pub mod solver;
pub mod spectral_domain;
pub mod structural;

pub use error::{Error, Result};
