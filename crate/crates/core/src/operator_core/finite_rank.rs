use num_complex::Complex64 as C64;

use super::vector::{Basis, CoeffVector};
use crate::error::{FredholmError, Result};

/// Relative threshold below which a range vector counts as dependent.
pub const PRUNE_TOL: f64 = 1e-12;

/// `F x = Σ_i ⟨v_i, x⟩ u_i` with independent range vectors `u_i`.
///
/// Construction re-expresses the operator on an orthonormal basis of
/// `span{u_i}` (column-pivoted Gram–Schmidt in the basis' inner product),
/// so `left()` is orthonormal after `new`. The discarded components are
/// accounted for in [`FiniteRankOperator::representation_error`].
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteRankOperator {
    basis: Basis,
    left: Vec<CoeffVector>,
    right: Vec<CoeffVector>,
    representation_error: f64,
}

impl FiniteRankOperator {
    pub fn new(left: Vec<CoeffVector>, right: Vec<CoeffVector>) -> Result<Self> {
        let basis = Self::common_basis(&left, &right)?;
        let original_rank = left.len();
        let (q, coeffs, dropped) = pivoted_orthonormalize(&left);
        // F = Σ_i u_i ⟨v_i,·⟩ = Σ_k q_k ⟨Σ_i conj(R[k][i]) v_i, ·⟩.
        let mut new_right = Vec::with_capacity(q.len());
        for row in &coeffs {
            let mut v = CoeffVector::zeros(basis.clone());
            for (i, r) in row.iter().enumerate() {
                v.axpy_unchecked(r.conj(), &right[i]);
            }
            new_right.push(v);
        }
        let rounding: f64 = left
            .iter()
            .zip(&right)
            .map(|(u, v)| u.norm() * v.norm())
            .sum::<f64>()
            * 16.0
            * f64::EPSILON
            * (original_rank.max(1) as f64);
        let dropped_err: f64 = dropped
            .iter()
            .map(|&(i, residual)| residual * right[i].norm())
            .sum();
        if q.is_empty() && left.iter().any(|u| u.norm() > 0.0) {
            return Err(FredholmError::DegenerateBasis);
        }
        Ok(Self {
            basis,
            left: q,
            right: new_right,
            representation_error: rounding + dropped_err,
        })
    }

    /// Builds from left vectors already known to be mutually orthogonal:
    /// each is normalized (its norm moves to the functional) and zeros are dropped.
    pub fn from_orthogonal(
        basis: Basis,
        left: Vec<CoeffVector>,
        right: Vec<CoeffVector>,
    ) -> Result<Self> {
        if left.is_empty() && right.is_empty() {
            return Ok(Self::zero(basis));
        }
        basis.check_same(&Self::common_basis(&left, &right)?)?;
        let mut l = Vec::new();
        let mut r = Vec::new();
        let mut rounding = 0.0;
        for (u, v) in left.into_iter().zip(right) {
            let n = u.norm();
            if n == 0.0 {
                continue;
            }
            rounding += 4.0 * f64::EPSILON * n * v.norm();
            l.push(u.scaled(C64::new(1.0 / n, 0.0)));
            r.push(v.scaled(C64::new(n, 0.0)));
        }
        Ok(Self {
            basis,
            left: l,
            right: r,
            representation_error: rounding,
        })
    }

    pub fn zero(basis: Basis) -> Self {
        Self {
            basis,
            left: Vec::new(),
            right: Vec::new(),
            representation_error: 0.0,
        }
    }

    fn common_basis(left: &[CoeffVector], right: &[CoeffVector]) -> Result<Basis> {
        if left.len() != right.len() {
            return Err(FredholmError::InvalidArgument(format!(
                "{} range vectors but {} functionals",
                left.len(),
                right.len()
            )));
        }
        let Some(first) = left.first() else {
            return Err(FredholmError::InvalidArgument(
                "finite-rank operator needs at least one term (use zero())".into(),
            ));
        };
        let basis = first.basis().clone();
        for v in left.iter().chain(right) {
            basis.check_same(v.basis())?;
        }
        Ok(basis)
    }

    pub fn basis(&self) -> &Basis {
        &self.basis
    }

    pub fn rank(&self) -> usize {
        self.left.len()
    }

    /// Orthonormal range vectors `u_i`.
    pub fn left(&self) -> &[CoeffVector] {
        &self.left
    }

    /// Functionals `v_i`, acting as `x ↦ ⟨v_i, x⟩`.
    pub fn right(&self) -> &[CoeffVector] {
        &self.right
    }

    /// Bound on `‖F_presented − F_stored‖` from pruning and rounding.
    pub fn representation_error(&self) -> f64 {
        self.representation_error
    }

    /// `(⟨v_1, x⟩, …, ⟨v_r, x⟩)`.
    pub fn coordinates(&self, x: &CoeffVector) -> Result<Vec<C64>> {
        self.basis.check_same(x.basis())?;
        Ok(self.right.iter().map(|v| v.pair_unchecked(x)).collect())
    }

    /// `Σ c_i u_i`.
    pub fn combine(&self, c: &[C64]) -> CoeffVector {
        let mut out = CoeffVector::zeros(self.basis.clone());
        for (ci, u) in c.iter().zip(&self.left) {
            out.axpy_unchecked(*ci, u);
        }
        out
    }

    pub fn apply(&self, x: &CoeffVector) -> Result<CoeffVector> {
        let c = self.coordinates(x)?;
        Ok(self.combine(&c))
    }

    pub fn scaled(&self, c: C64) -> Self {
        Self {
            basis: self.basis.clone(),
            left: self.left.clone(),
            right: self.right.iter().map(|v| v.scaled(c.conj())).collect(),
            representation_error: self.representation_error * c.norm(),
        }
    }

    /// The sum `self + other`, re-pruned.
    pub fn sum(&self, other: &Self) -> Result<Self> {
        self.basis.check_same(&other.basis)?;
        if other.rank() == 0 {
            return Ok(self.clone());
        }
        if self.rank() == 0 {
            return Ok(other.clone());
        }
        let left = self.left.iter().chain(&other.left).cloned().collect();
        let right = self.right.iter().chain(&other.right).cloned().collect();
        let mut out = Self::new(left, right)?;
        out.representation_error += self.representation_error + other.representation_error;
        Ok(out)
    }

    /// `‖F‖_HS² = Σ_ij ⟨u_i,u_j⟩⟨v_j,v_i⟩`.
    pub fn hilbert_schmidt_norm(&self) -> f64 {
        let r = self.rank();
        let mut total = 0.0;
        for i in 0..r {
            for j in 0..r {
                let gu = self.left[i].pair_unchecked(&self.left[j]);
                let gv = self.right[j].pair_unchecked(&self.right[i]);
                total += (gu * gv).re;
            }
        }
        total.max(0.0).sqrt()
    }

    /// Same operator with Fourier vectors re-embedded at `max_index`.
    pub fn to_fourier(&self, max_index: usize) -> Result<Self> {
        let left = self
            .left
            .iter()
            .map(|u| u.to_fourier(max_index))
            .collect::<Result<Vec<_>>>()?;
        let right = self
            .right
            .iter()
            .map(|v| v.to_fourier(max_index))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            basis: Basis::fourier(max_index),
            left,
            right,
            representation_error: self.representation_error,
        })
    }
}

/// Column-pivoted modified Gram–Schmidt with one reorthogonalization pass.
///
/// Returns the orthonormal vectors `q_k`, coefficient rows with
/// `u_i = Σ_k q_k R[k][i]`, and `(i, residual norm)` for dropped columns.
fn pivoted_orthonormalize(
    cols: &[CoeffVector],
) -> (Vec<CoeffVector>, Vec<Vec<C64>>, Vec<(usize, f64)>) {
    let r = cols.len();
    let max_norm = cols.iter().map(CoeffVector::norm).fold(0.0, f64::max);
    let drop_tol = PRUNE_TOL * max_norm;
    let mut work: Vec<CoeffVector> = cols.to_vec();
    let mut done = vec![false; r];
    let mut q: Vec<CoeffVector> = Vec::new();
    let mut coeffs: Vec<Vec<C64>> = Vec::new();

    loop {
        let pivot = (0..r)
            .filter(|&i| !done[i])
            .map(|i| (i, work[i].norm()))
            .max_by(|a, b| a.1.total_cmp(&b.1));
        let Some((p, pnorm)) = pivot else { break };
        if pnorm <= drop_tol || pnorm == 0.0 {
            break;
        }
        done[p] = true;
        let qk = work[p].scaled(C64::new(1.0 / pnorm, 0.0));
        let mut row = vec![C64::new(0.0, 0.0); r];
        row[p] = C64::new(pnorm, 0.0);
        for j in 0..r {
            if done[j] {
                continue;
            }
            for _ in 0..2 {
                let c = qk.pair_unchecked(&work[j]);
                work[j].axpy_unchecked(-c, &qk);
                row[j] += c;
            }
        }
        q.push(qk);
        coeffs.push(row);
    }
    let dropped = (0..r)
        .filter(|&i| !done[i])
        .map(|i| (i, work[i].norm()))
        .collect();
    (q, coeffs, dropped)
}
