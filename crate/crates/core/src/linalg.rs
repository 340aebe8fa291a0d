//! Singular value decompositions of nalgebra matrices, computed by faer.

use faer::traits::ComplexField;
use nalgebra::{DMatrix, Scalar};

use crate::error::{FredholmError, Result};
use crate::operator_core::C64;

pub(crate) trait Entry: ComplexField<Real = f64> + Scalar + Copy {
    fn real_part(self) -> f64;
}

impl Entry for f64 {
    fn real_part(self) -> f64 {
        self
    }
}

impl Entry for C64 {
    fn real_part(self) -> f64 {
        self.re
    }
}

/// Thin SVD `M = U diag(σ) Vᴴ` with `σ` nonincreasing.
pub(crate) struct Svd<T> {
    pub u: DMatrix<T>,
    pub sigma: Vec<f64>,
    pub v: DMatrix<T>,
}

fn to_faer<T: Entry>(m: &DMatrix<T>) -> faer::Mat<T> {
    faer::Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

pub(crate) fn svd<T: Entry>(m: &DMatrix<T>) -> Result<Svd<T>> {
    let (r, c) = m.shape();
    if r == 0 || c == 0 {
        return Ok(Svd {
            u: DMatrix::from_element(r, 0, T::zero_impl()),
            sigma: Vec::new(),
            v: DMatrix::from_element(c, 0, T::zero_impl()),
        });
    }
    let f = to_faer(m)
        .thin_svd()
        .map_err(|_| FredholmError::NoConvergence("svd".into()))?;
    let (u, v, s) = (f.U(), f.V(), f.S().column_vector());
    let k = s.nrows();
    Ok(Svd {
        u: DMatrix::from_fn(r, k, |i, j| u[(i, j)]),
        sigma: (0..k).map(|i| s[i].real_part()).collect(),
        v: DMatrix::from_fn(c, k, |i, j| v[(i, j)]),
    })
}

/// Singular values in nonincreasing order.
pub(crate) fn singular_values<T: Entry>(m: &DMatrix<T>) -> Result<Vec<f64>> {
    if m.is_empty() {
        return Ok(Vec::new());
    }
    to_faer(m)
        .singular_values()
        .map(|sv| sv.into_iter().collect())
        .map_err(|_| FredholmError::NoConvergence("singular values".into()))
}
