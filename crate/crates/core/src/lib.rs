//! Simulation of the reaction–diffusion population model
//! `u_t = D(u^{ν−1}u_x)_x + a u^μ` on a bounded habitat with absorbing
//! edges, fate classification, and estimation of critical survival
//! thresholds.

// `!(x > 0.0)` is used on purpose so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod dist;
pub mod error;
pub mod output;
pub mod scaling;
pub mod solver;
pub mod threshold;

pub use error::{Error, Result};
