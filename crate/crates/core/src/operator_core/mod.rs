//! Model space, vectors, and operator presentations.
//!
//! The infinite-dimensional Hilbert space is represented at a chosen
//! resolution: Fourier modes on the circle, Gauss–Legendre point values on
//! `[0, 1]`, or plain coordinates. Operators are immutable once built.

mod finite_rank;
mod function;
mod operator;
mod quadrature;
mod symbol;
mod vector;

pub use finite_rank::{FiniteRankOperator, PRUNE_TOL};
pub use function::{KernelFn, RealFn};
pub use operator::{
    CompactOperator, Domain, FiniteMatrix, KernelTerm, SampledKernel, SeparableKernel,
    POWER_ITERATION_SAFETY,
};
pub use quadrature::GaussGrid;
pub use symbol::{DiagonalMultiplier, Symbol, ENVELOPE_CHECK_RANGE};
pub use vector::{Basis, CoeffVector, VectorSpec};

pub use num_complex::Complex64 as C64;

use crate::error::Result;

/// `T x` for any operator presentation.
pub fn apply(t: &CompactOperator, x: &CoeffVector) -> Result<CoeffVector> {
    t.apply(x)
}

/// `⟨v, x⟩`.
pub fn pair(v: &CoeffVector, x: &CoeffVector) -> Result<C64> {
    v.pair(x)
}

pub fn norm_upper_bound(t: &CompactOperator) -> Result<f64> {
    t.norm_upper_bound()
}
