//! Counting small limit cycles of random planar polynomial vector fields
//! near a linear center via the Poincare return map.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod error;
pub mod field;
pub mod poincare;
pub mod remez;
pub mod tails;
pub mod zeros;

pub use error::{Error, Result};
