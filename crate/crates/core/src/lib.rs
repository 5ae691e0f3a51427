//! Landau-Zener-Stückelberg-Majorana interference in two-level and chain
//! systems with a chiral-mirror-like symmetry.

// Negated comparisons are used on purpose so that NaN inputs are rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod adiabatic;
pub mod analysis;
pub mod error;
pub mod propagator;
pub mod schedules;
pub mod ssh;
pub mod table;
pub mod verify;

pub use error::{Error, Result};
