//! Certified solver for second-kind operator equations `(I − T) x = y`.
//!
//! Given a compact `T`, the solver splits `T = F + K` with `F` of finite
//! rank and `‖K‖ ≤ κ < 1`, inverts `R = I − K` by a Neumann series, and
//! reduces `I − S` (with `S = F R⁻¹`) to a small matrix on the range of `F`.
//! The answer is one of two certified branches: a solution `x` with a
//! residual bound, or a unit vector `y*` with `T y* ≈ y*`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod approximation;
pub mod cli_io;
pub mod error;
pub mod finite_dim_lab;
mod linalg;
pub mod neumann;
pub mod operator_core;
pub mod psido_circle;
pub mod solver;

pub use error::{FredholmError, Result};
