//! Monte Carlo harness, file formats and command-line front end for
//! [`satlink_core`].

// Range checks are written `!(x > 0.0)` on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
mod error;
pub mod harness;
pub mod output;

pub use error::{AppError, AppResult};
