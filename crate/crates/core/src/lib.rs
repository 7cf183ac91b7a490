//! Simulator and bound checker for rank collapse in deep attention and
//! state-space stacks with scaled skip connections.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod dynamics;
pub mod error;
pub mod exec;
pub mod harness;
pub mod linalg;
pub mod metrics;
pub mod mixing;
pub mod oracles;

#[cfg(test)]
pub(crate) mod testutil;

pub use error::{Error, Result};
pub use linalg::Matrix;
