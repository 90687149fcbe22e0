//! Singlet state preparation from orbital-optimized paired coupled cluster
//! amplitudes.
//!
//! The pipeline solves pCCD in the seniority-zero (pair) space, optionally
//! optimizes the orbitals, transplants the leading amplitudes into a
//! product of paired-excitation rotations (UpCCD), and checks the prepared
//! state against exact configuration interaction and quantum phase
//! estimation.

// `!(x >= 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bits;
pub mod circuit;
pub mod cli;
pub mod error;
pub mod exactref;
pub mod integrals;
pub mod linalg;
pub mod orbital_opt;
pub mod pairspace;
pub mod qpe;
pub mod report;

pub use error::{Error, Result};
