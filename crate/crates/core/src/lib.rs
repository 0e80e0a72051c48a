//! Numerical certification of heat-kernel gradient and Laplacian estimates
//! on model geometries.

// `!(x > 0.0)` is used on purpose throughout: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cutoff;
pub mod discrete;
pub mod error;
pub mod estimates;
pub mod exec;
pub mod geometry;
pub mod kernels;
pub mod quad;
pub mod suite;

pub use error::{Error, Result};
pub use exec::Execution;
