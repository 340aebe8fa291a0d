//! The Fredholm alternative for `(I − T) x = y`.
//!
//! With `T = F + K`, `R = I − K` and `S = F R⁻¹`, the operator factors as
//! `I − T = (I − S) R`. The range of `S` lies in `span{u_i}`, so `I − S` is
//! decided by the `r × r` matrix `A = I − B`, `B_ij = ⟨v_i, R⁻¹ u_j⟩`.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::approximation::{split_with_budget, Budget, SplitMethod, Splitting};
use crate::error::{FredholmError, Result};
use crate::linalg;
use crate::neumann::apply_inverse_detailed;
use crate::operator_core::{Basis, CoeffVector, CompactOperator, VectorSpec, C64};

/// `sigma_min` below this multiple of `1 + ‖A‖` selects the fixed-vector branch.
pub const SINGULAR_THRESHOLD: f64 = 1e-10;
/// Upper edge of the band where neither branch is trusted.
pub const AMBIGUOUS_UPPER: f64 = 1e-6;
/// Smallest series tolerance; below this rounding dominates the series.
pub const NEUMANN_EPS_FLOOR: f64 = 1e-15;

/// `tol / (100 r)`, floored at [`NEUMANN_EPS_FLOOR`].
pub fn default_neumann_eps(tol: f64, r: usize) -> f64 {
    (tol / (100.0 * r.max(1) as f64)).max(NEUMANN_EPS_FLOOR)
}

/// `I − S` restricted to `span{u_i}`, in the coordinates of the `u_i`.
#[derive(Debug, Clone)]
pub struct ReducedSystem {
    space: Basis,
    left: Vec<CoeffVector>,
    right: Vec<CoeffVector>,
    resolved: Vec<CoeffVector>,
    b: DMatrix<C64>,
    a: DMatrix<C64>,
    sigma_min: f64,
    a_norm: f64,
    neumann_eps: f64,
    neumann_terms: usize,
}

impl ReducedSystem {
    pub fn rank(&self) -> usize {
        self.left.len()
    }

    /// The orthonormal `u_i`.
    pub fn basis(&self) -> &[CoeffVector] {
        &self.left
    }

    /// `R⁻¹ u_j`.
    pub fn resolved(&self) -> &[CoeffVector] {
        &self.resolved
    }

    pub fn b(&self) -> &DMatrix<C64> {
        &self.b
    }

    pub fn a(&self) -> &DMatrix<C64> {
        &self.a
    }

    /// Smallest singular value of `A`; `+∞` when `r = 0`.
    pub fn sigma_min(&self) -> f64 {
        self.sigma_min
    }

    /// Spectral norm of `A`.
    pub fn a_norm(&self) -> f64 {
        self.a_norm
    }

    pub fn neumann_eps(&self) -> f64 {
        self.neumann_eps
    }

    /// Longest series used for any `R⁻¹ u_j`.
    pub fn neumann_terms(&self) -> usize {
        self.neumann_terms
    }

    /// `1 + ‖A‖`, the scale of the singularity gate.
    pub fn gate_scale(&self) -> f64 {
        1.0 + self.a_norm
    }

    fn combine(&self, c: &[C64]) -> CoeffVector {
        let mut w = CoeffVector::zeros(self.space.clone());
        for (u, &cj) in self.left.iter().zip(c) {
            w.axpy_unchecked(cj, u);
        }
        w
    }
}

/// Builds `A = I − B` with `B_ij = ⟨v_i, R⁻¹ u_j⟩`.
pub fn reduce(sp: &Splitting, neumann_eps: f64) -> Result<ReducedSystem> {
    let f = sp.finite();
    let r = f.rank();
    let mut resolved = Vec::with_capacity(r);
    let mut terms = 0;
    for u in f.left() {
        let app = apply_inverse_detailed(sp.remainder(), sp.kappa(), u, neumann_eps)?;
        terms = terms.max(app.terms_used);
        resolved.push(app.z);
    }
    let b = DMatrix::from_fn(r, r, |i, j| f.right()[i].pair_unchecked(&resolved[j]));
    let a = DMatrix::<C64>::identity(r, r) - &b;
    let (sigma_min, a_norm) = if r == 0 {
        (f64::INFINITY, 0.0)
    } else {
        let sv = linalg::singular_values(&a)?;
        (sv[r - 1], sv[0])
    };
    Ok(ReducedSystem {
        space: f.basis().clone(),
        left: f.left().to_vec(),
        right: f.right().to_vec(),
        resolved,
        b,
        a,
        sigma_min,
        a_norm,
        neumann_eps,
        neumann_terms: terms,
    })
}

/// `R x = x − K x`.
pub fn apply_r(sp: &Splitting, x: &CoeffVector) -> Result<CoeffVector> {
    x.sub(&sp.remainder().apply(x)?)
}

/// `S x = F R⁻¹ x`.
pub fn apply_s(sp: &Splitting, x: &CoeffVector, neumann_eps: f64) -> Result<CoeffVector> {
    let z = apply_inverse_detailed(sp.remainder(), sp.kappa(), x, neumann_eps)?.z;
    sp.finite().apply(&z)
}

#[derive(Debug, Clone, PartialEq)]
pub enum Branch {
    /// `(I − T) x = y` with absolute residual `residual`.
    Solution { x: CoeffVector, residual: f64 },
    /// `‖y_star‖ = 1` and `‖T y_star − y_star‖ = residual`.
    FixedVector { y_star: CoeffVector, residual: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostics {
    pub resolution: usize,
    pub kappa: f64,
    pub r: usize,
    pub sigma_min: f64,
    pub neumann_terms: usize,
    pub neumann_eps: f64,
    pub method: SplitMethod,
    /// `(1 + ‖w‖ / ‖y‖) ‖y‖ / (1 − κ)`, bounding `‖x‖` on the solution branch.
    pub solution_norm_bound: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub branch: Branch,
    pub diagnostics: Diagnostics,
}

impl Outcome {
    pub fn is_solution(&self) -> bool {
        matches!(self.branch, Branch::Solution { .. })
    }

    pub fn residual(&self) -> f64 {
        match &self.branch {
            Branch::Solution { residual, .. } | Branch::FixedVector { residual, .. } => *residual,
        }
    }

    /// `x` or `y_star`.
    pub fn vector(&self) -> &CoeffVector {
        match &self.branch {
            Branch::Solution { x, .. } => x,
            Branch::FixedVector { y_star, .. } => y_star,
        }
    }
}

/// Splits `T` on the basis of `y` and solves `(I − T) x = y`.
pub fn solve(t: &CompactOperator, y: &CoeffVector, theta: f64, tol: f64) -> Result<Outcome> {
    solve_with_budget(t, y, theta, tol, Budget::default())
}

pub fn solve_with_budget(
    t: &CompactOperator,
    y: &CoeffVector,
    theta: f64,
    tol: f64,
    budget: Budget,
) -> Result<Outcome> {
    if !(tol > 0.0) {
        return Err(FredholmError::InvalidArgument(format!(
            "tol must be positive, got {tol}"
        )));
    }
    let sp = split_with_budget(t, theta, y.basis(), budget)?;
    solve_split(&sp, y, tol)
}

/// Solves with an existing splitting.
pub fn solve_split(sp: &Splitting, y: &CoeffVector, tol: f64) -> Result<Outcome> {
    sp.basis().check_same(y.basis())?;
    let neumann_eps = default_neumann_eps(tol, sp.finite().rank());
    let rs = reduce(sp, neumann_eps)?;
    let scale = rs.gate_scale();
    let mut diagnostics = Diagnostics {
        resolution: y.basis().resolution(),
        kappa: sp.kappa(),
        r: rs.rank(),
        sigma_min: rs.sigma_min,
        neumann_terms: rs.neumann_terms,
        neumann_eps,
        method: sp.method().clone(),
        solution_norm_bound: None,
    };

    if rs.sigma_min < SINGULAR_THRESHOLD * scale {
        let (y_star, residual) = extract_fixed_vector(&rs, sp, tol)?;
        return Ok(Outcome {
            branch: Branch::FixedVector { y_star, residual },
            diagnostics,
        });
    }
    if rs.sigma_min <= AMBIGUOUS_UPPER * scale {
        return Err(FredholmError::AmbiguousSingularity {
            sigma_min: rs.sigma_min,
            lower: SINGULAR_THRESHOLD * scale,
            upper: AMBIGUOUS_UPPER * scale,
        });
    }

    // c_i = ⟨v_i, R⁻¹ y⟩, then (I − B) w = c lifts y to u = y + Σ w_j u_j
    // with (I − S) u = y, and x = R⁻¹ u.
    let ry = apply_inverse_detailed(sp.remainder(), sp.kappa(), y, neumann_eps)?;
    let mut terms = rs.neumann_terms.max(ry.terms_used);
    let c = DVector::from_iterator(rs.rank(), rs.right.iter().map(|v| v.pair_unchecked(&ry.z)));
    let w_coords = if rs.rank() == 0 {
        DVector::zeros(0)
    } else {
        rs.a.clone()
            .lu()
            .solve(&c)
            .ok_or(FredholmError::AmbiguousSingularity {
                sigma_min: rs.sigma_min,
                lower: SINGULAR_THRESHOLD * scale,
                upper: AMBIGUOUS_UPPER * scale,
            })?
    };
    let w = rs.combine(w_coords.as_slice());
    let u = y.add(&w)?;
    let xr = apply_inverse_detailed(sp.remainder(), sp.kappa(), &u, neumann_eps)?;
    terms = terms.max(xr.terms_used);
    let x = xr.z;

    let residual = x.sub(&sp.operator().apply(&x)?)?.sub(y)?.norm();
    let allowed = tol * y.norm();
    if !(residual <= allowed) {
        return Err(FredholmError::ResidualCheckFailed { residual, allowed });
    }
    let y_norm = y.norm();
    diagnostics.neumann_terms = terms;
    diagnostics.solution_norm_bound = Some(if y_norm == 0.0 {
        0.0
    } else {
        (1.0 + w.norm() / y_norm) * y_norm / (1.0 - sp.kappa())
    });
    Ok(Outcome {
        branch: Branch::Solution { x, residual },
        diagnostics,
    })
}

/// Unit `y_star` with `T y_star ≈ y_star`, from the null direction of `A`.
///
/// Returns `y_star` (largest coefficient real and positive) and
/// `‖T y_star − y_star‖`.
pub fn extract_fixed_vector(
    rs: &ReducedSystem,
    sp: &Splitting,
    tol: f64,
) -> Result<(CoeffVector, f64)> {
    if rs.rank() == 0 {
        return Err(FredholmError::CertificationFailed {
            residual: f64::INFINITY,
            tol,
        });
    }
    let svd = linalg::svd(&rs.a)?;
    let c: Vec<C64> = svd.v.column(svd.sigma.len() - 1).iter().copied().collect();

    // S w = w for w = Σ c_j u_j; then y = R⁻¹ w has (I − T) y = (I − S) w.
    // R⁻¹ w = Σ c_j R⁻¹ u_j by linearity.
    let mut y = CoeffVector::zeros(rs.space.clone());
    for (z, &cj) in rs.resolved.iter().zip(&c) {
        y.axpy_unchecked(cj, z);
    }
    let y_star = y
        .normalized()
        .ok_or(FredholmError::CertificationFailed {
            residual: f64::INFINITY,
            tol,
        })?
        .with_canonical_phase();
    let residual = sp.operator().apply(&y_star)?.sub(&y_star)?.norm();
    if !(residual <= tol) {
        return Err(FredholmError::CertificationFailed { residual, tol });
    }
    Ok((y_star, residual))
}

/// Residuals recomputed from scratch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CertifyReport {
    /// `‖(I − T) x − y‖` or `‖T y_star − y_star‖` at the solve resolution.
    pub same_resolution: Option<f64>,
    /// The same quantity after lifting to the refined basis.
    pub doubled_resolution: Option<f64>,
    pub doubled_resolution_size: Option<usize>,
}

/// Recomputes the residual of `outcome` at the solve resolution and, when
/// `T` can be re-presented there, at the refined resolution.
///
/// On the refined basis the solution is lifted by `x' = y' + T x` and a
/// fixed vector by `y' = T y_star / ‖T y_star‖`. A solution needs `rhs` for
/// either number.
pub fn certify(t: &CompactOperator, outcome: &Outcome, rhs: Option<&VectorSpec>) -> CertifyReport {
    let v = outcome.vector();
    let basis = v.basis().clone();
    let fine = basis.refined();
    let fine_op = fine.as_ref().and_then(|b| t.at_basis(b).ok().flatten());

    let (same, doubled) = match &outcome.branch {
        Branch::Solution { x, .. } => {
            let y = rhs.and_then(|s| s.sample(&basis).ok());
            let same = y.and_then(|y| solution_residual(t, x, &y).ok());
            let doubled = match (&fine, &fine_op, rhs) {
                (Some(fb), Some(ft), Some(spec)) => (|| -> Result<Option<f64>> {
                    let y_fine = spec.sample(fb)?;
                    let Some(tx) = t.apply_lifted(x, fb)? else {
                        return Ok(None);
                    };
                    let x_fine = y_fine.add(&tx)?;
                    Ok(Some(solution_residual(ft, &x_fine, &y_fine)?))
                })()
                .ok()
                .flatten(),
                _ => None,
            };
            (same, doubled)
        }
        Branch::FixedVector { y_star, .. } => {
            let same = t
                .apply(y_star)
                .and_then(|ty| ty.sub(y_star))
                .map(|d| d.norm())
                .ok();
            let doubled = match (&fine, &fine_op) {
                (Some(fb), Some(ft)) => (|| -> Result<Option<f64>> {
                    let Some(ty) = t.apply_lifted(y_star, fb)? else {
                        return Ok(None);
                    };
                    let Some(yf) = ty.normalized() else {
                        return Ok(None);
                    };
                    Ok(Some(ft.apply(&yf)?.sub(&yf)?.norm()))
                })()
                .ok()
                .flatten(),
                _ => None,
            };
            (same, doubled)
        }
    };
    CertifyReport {
        same_resolution: same,
        doubled_resolution: doubled,
        doubled_resolution_size: doubled.and(fine.map(|b| b.resolution())),
    }
}

fn solution_residual(t: &CompactOperator, x: &CoeffVector, y: &CoeffVector) -> Result<f64> {
    Ok(x.sub(&t.apply(x)?)?.sub(y)?.norm())
}
