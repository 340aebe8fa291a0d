//! `R⁻¹ = (I − K)⁻¹` by a truncated geometric series with an a-priori
//! term count.

use serde::Serialize;

use crate::error::{FredholmError, Result};
use crate::operator_core::{CoeffVector, CompactOperator, C64};

/// Series length `J` with `κ^{J+1} / (1 − κ) ≤ eps_rel`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NeumannPlan {
    pub kappa: f64,
    pub eps_rel: f64,
    pub terms: usize,
}

impl NeumannPlan {
    pub fn new(kappa: f64, eps_rel: f64) -> Result<Self> {
        Ok(Self {
            kappa,
            eps_rel,
            terms: terms_needed(kappa, eps_rel)?,
        })
    }

    /// `κ^{J+1} / (1 − κ)`.
    pub fn remainder_bound(&self) -> f64 {
        remainder(self.kappa, self.terms)
    }
}

fn remainder(kappa: f64, j: usize) -> f64 {
    kappa.powi(j as i32 + 1) / (1.0 - kappa)
}

fn check_kappa(kappa: f64) -> Result<()> {
    if !(0.0..1.0).contains(&kappa) {
        return Err(FredholmError::KappaOutOfRange { kappa });
    }
    Ok(())
}

/// Smallest `J ≥ 0` with `κ^{J+1} / (1 − κ) ≤ eps_rel`.
pub fn terms_needed(kappa: f64, eps_rel: f64) -> Result<usize> {
    check_kappa(kappa)?;
    if !(eps_rel > 0.0) {
        return Err(FredholmError::InvalidArgument(format!(
            "eps_rel must be positive, got {eps_rel}"
        )));
    }
    if kappa == 0.0 {
        return Ok(0);
    }
    // Start just below the closed-form root and walk up.
    let guess = ((eps_rel * (1.0 - kappa)).ln() / kappa.ln() - 1.0).floor();
    let mut j = if guess.is_finite() && guess > 1.0 {
        guess as usize - 1
    } else {
        0
    };
    while j > 0 && remainder(kappa, j - 1) <= eps_rel {
        j -= 1;
    }
    while remainder(kappa, j) > eps_rel {
        j += 1;
    }
    Ok(j)
}

/// Result of a series application.
#[derive(Debug, Clone, PartialEq)]
pub struct NeumannApplication {
    pub z: CoeffVector,
    /// Powers `K^j y` actually summed, `j = 0..terms_used`.
    pub terms_used: usize,
    pub plan: NeumannPlan,
    /// `‖(I − K) z − y‖`, recomputed with a fresh apply.
    pub residual: f64,
}

/// `z = Σ_{j=0..J} K^j y`.
pub fn apply_inverse(
    k: &CompactOperator,
    kappa: f64,
    y: &CoeffVector,
    eps_rel: f64,
) -> Result<CoeffVector> {
    apply_inverse_detailed(k, kappa, y, eps_rel).map(|a| a.z)
}

/// As [`apply_inverse`], also reporting the term count and residual.
///
/// Terms are added in order `j = 0, 1, …`; the loop stops early once a term's
/// norm drops below `1e−3 · eps_rel · ‖y‖ · (1 − κ)`.
pub fn apply_inverse_detailed(
    k: &CompactOperator,
    kappa: f64,
    y: &CoeffVector,
    eps_rel: f64,
) -> Result<NeumannApplication> {
    let plan = NeumannPlan::new(kappa, eps_rel)?;
    let y_norm = y.norm();
    let cutoff = 1e-3 * eps_rel * y_norm * (1.0 - kappa);

    let mut z = y.clone();
    let mut term = y.clone();
    let mut used = 1;
    for _ in 0..plan.terms {
        if term.norm() <= cutoff {
            break;
        }
        term = k.apply(&term)?;
        z.axpy(C64::new(1.0, 0.0), &term)?;
        used += 1;
    }

    let residual = z.sub(&k.apply(&z)?)?.sub(y)?.norm();
    let allowed = 2.0 * eps_rel * y_norm;
    if !(residual <= allowed) {
        return Err(FredholmError::ResidualCheckFailed { residual, allowed });
    }
    Ok(NeumannApplication {
        z,
        terms_used: used,
        plan,
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator_core::{Basis, FiniteMatrix};
    use nalgebra::{dmatrix, DMatrix};

    fn real(basis: &Basis, v: &[f64]) -> CoeffVector {
        CoeffVector::from_real(basis.clone(), v).unwrap()
    }

    #[test]
    fn term_counts() {
        assert_eq!(terms_needed(0.0, 1e-9).unwrap(), 0);
        assert_eq!(terms_needed(0.5, 1e-6).unwrap(), 20);
        assert_eq!(terms_needed(0.9, 1e-3).unwrap(), 87);
        // 0.5^20 ≈ 9.54e−7, 0.5^19 ≈ 1.9e−6
        assert!(remainder(0.5, 20) <= 1e-6 && remainder(0.5, 19) > 1e-6);
        assert!(remainder(0.9, 87) <= 1e-3 && remainder(0.9, 86) > 1e-3);
    }

    #[test]
    fn term_count_is_minimal_over_a_sweep() {
        for &kappa in &[1e-8, 0.01, 0.3, 0.77, 0.999] {
            for &eps in &[1e-1, 1e-6, 1e-14] {
                let j = terms_needed(kappa, eps).unwrap();
                assert!(remainder(kappa, j) <= eps);
                assert!(
                    j == 0 || remainder(kappa, j - 1) > eps,
                    "kappa {kappa} eps {eps}"
                );
            }
        }
    }

    #[test]
    fn kappa_out_of_range() {
        for kappa in [1.0, 1.5, -0.1, f64::NAN] {
            assert!(matches!(
                terms_needed(kappa, 1e-6),
                Err(FredholmError::KappaOutOfRange { .. })
            ));
        }
    }

    #[test]
    fn zero_remainder_is_identity() {
        let b = Basis::euclidean(2);
        let k: CompactOperator = FiniteMatrix::from_real(DMatrix::zeros(2, 2))
            .unwrap()
            .into();
        let y = real(&b, &[1.0, -3.0]);
        assert_eq!(apply_inverse(&k, 0.0, &y, 1e-12).unwrap(), y);
    }

    #[test]
    fn diagonal_resolvents() {
        let b = Basis::euclidean(2);
        let y = real(&b, &[1.0, 1.0]);
        let half: CompactOperator = FiniteMatrix::from_real(dmatrix![0.5, 0.0; 0.0, 0.5])
            .unwrap()
            .into();
        let z = apply_inverse(&half, 0.5, &y, 1e-8).unwrap();
        assert!(z.sub(&real(&b, &[2.0, 2.0])).unwrap().norm() < 1e-6);

        let d: CompactOperator = FiniteMatrix::from_real(dmatrix![0.5, 0.0; 0.0, 0.25])
            .unwrap()
            .into();
        let z = apply_inverse(&d, 0.5, &y, 1e-8).unwrap();
        assert!(z.sub(&real(&b, &[2.0, 4.0 / 3.0])).unwrap().norm() < 1e-6);
    }

    #[test]
    fn understated_kappa_is_caught() {
        let b = Basis::euclidean(1);
        let k: CompactOperator = FiniteMatrix::from_real(dmatrix![0.9]).unwrap().into();
        let r = apply_inverse(&k, 0.1, &real(&b, &[1.0]), 1e-10);
        assert!(matches!(r, Err(FredholmError::ResidualCheckFailed { .. })));
    }
}
