//! Certified splittings `T = F + K` with `F` of finite rank and `‖K‖ ≤ κ < 1`.
//!
//! Three routes produce `F`:
//! - Fourier projection `F = P_N T` for symbol-defined operators, with the
//!   tail certified from the symbol's monotone envelope;
//! - truncated SVD of a discretized kernel or matrix, with the
//!   Hilbert–Schmidt norm of the discarded part as certificate;
//! - the presentation itself when it is already finite rank (`K = 0`).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{FredholmError, Result};
use crate::linalg;
use crate::operator_core::{Basis, CoeffVector, CompactOperator, FiniteRankOperator, C64};

pub const DEFAULT_THETA: f64 = 0.5;
pub const MAX_INDEX: usize = 4096;
pub const MAX_RANK: usize = 512;

/// Relative share of `theta` held back for rounding in `F` and `K`.
const ROUNDING_RESERVE: f64 = 1e-9;

/// Ceilings on the Fourier index and the rank of `F`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Budget {
    pub max_index: usize,
    pub max_rank: usize,
}

impl Default for Budget {
    fn default() -> Self {
        Self {
            max_index: MAX_INDEX,
            max_rank: MAX_RANK,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SplitMethod {
    FourierProjection {
        max_index: usize,
    },
    TruncatedSvd {
        rank: usize,
    },
    AlreadyFiniteRank,
    /// Sum presentations split term by term.
    Combined {
        parts: Vec<SplitMethod>,
    },
}

/// `T = F + K` with `‖K‖ ≤ kappa ≤ theta < 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Splitting {
    operator: CompactOperator,
    finite: FiniteRankOperator,
    remainder: CompactOperator,
    kappa: f64,
    theta: f64,
    method: SplitMethod,
}

impl Splitting {
    /// The operator `T` that was split.
    pub fn operator(&self) -> &CompactOperator {
        &self.operator
    }

    /// `F`.
    pub fn finite(&self) -> &FiniteRankOperator {
        &self.finite
    }

    /// `K = T − F`, stored as `Sum{T, Scaled{−1, F}}`.
    pub fn remainder(&self) -> &CompactOperator {
        &self.remainder
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn method(&self) -> &SplitMethod {
        &self.method
    }

    pub fn basis(&self) -> &Basis {
        self.finite.basis()
    }
}

/// `F = P_N T` and a certified bound on `‖T − P_N T‖`, with `F` represented
/// on the Fourier basis `basis`.
pub fn fourier_project(
    t: &CompactOperator,
    max_index: usize,
    basis: &Basis,
) -> Result<(FiniteRankOperator, f64)> {
    let Basis::Fourier { max_index: working } = *basis else {
        return Err(FredholmError::BasisMismatch {
            expected: "fourier".into(),
            found: basis.to_string(),
        });
    };
    let keep = max_index.min(working) as i64;
    match t {
        CompactOperator::DiagonalMultiplier(m) => {
            let tail = m.symbol().tail_bound(max_index as u64)?;
            let mut left = Vec::new();
            let mut right = Vec::new();
            for n in -keep..=keep {
                let sigma = m.value(n);
                if sigma.norm() == 0.0 {
                    continue;
                }
                let pos = basis
                    .fourier_position(n)
                    .expect("index within working range");
                let e = CoeffVector::unit(basis.clone(), pos);
                left.push(e.scaled(sigma));
                right.push(e);
            }
            Ok((
                FiniteRankOperator::from_orthogonal(basis.clone(), left, right)?,
                tail,
            ))
        }
        CompactOperator::FiniteMatrix(fm) => {
            fm.basis().check_same(basis)?;
            let a = fm.matrix();
            let mut left = Vec::new();
            let mut right = Vec::new();
            let mut tail_sq = 0.0;
            for pos in 0..basis.dim() {
                let n = basis.fourier_index(pos).unwrap_or(0);
                let row_sq: f64 = a.row(pos).iter().map(|v| v.norm_sqr()).sum();
                if n.abs() > keep {
                    tail_sq += row_sq;
                } else if row_sq > 0.0 {
                    left.push(CoeffVector::unit(basis.clone(), pos));
                    let v = a.row(pos).iter().map(|c| c.conj()).collect();
                    right.push(CoeffVector::new(basis.clone(), v)?);
                }
            }
            Ok((
                FiniteRankOperator::from_orthogonal(basis.clone(), left, right)?,
                tail_sq.sqrt(),
            ))
        }
        CompactOperator::FiniteRank(f) => {
            f.basis().check_same(basis)?;
            if f.rank() == 0 {
                return Ok((f.clone(), 0.0));
            }
            let mut head = Vec::with_capacity(f.rank());
            let mut tail_vecs = Vec::with_capacity(f.rank());
            for u in f.left() {
                let mut h = u.clone();
                let mut tl = CoeffVector::zeros(basis.clone());
                for pos in 0..basis.dim() {
                    let n = basis.fourier_index(pos).unwrap_or(0);
                    if n.abs() > keep {
                        tl.coeffs_mut()[pos] = h.coeffs()[pos];
                        h.coeffs_mut()[pos] = C64::new(0.0, 0.0);
                    }
                }
                head.push(h);
                tail_vecs.push(tl);
            }
            let tail_hs = gram_hs(&tail_vecs, f.right());
            let projected = if head.iter().all(CoeffVector::is_zero) {
                FiniteRankOperator::zero(basis.clone())
            } else {
                FiniteRankOperator::new(head, f.right().to_vec())?
            };
            Ok((projected, tail_hs))
        }
        CompactOperator::Scaled(c, inner) => {
            let (f, tail) = fourier_project(inner, max_index, basis)?;
            Ok((f.scaled(*c), c.norm() * tail))
        }
        CompactOperator::Sum(a, b) => {
            let (fa, ta) = fourier_project(a, max_index, basis)?;
            let (fb, tb) = fourier_project(b, max_index, basis)?;
            Ok((fa.sum(&fb)?, ta + tb))
        }
        other => Err(FredholmError::BasisMismatch {
            expected: "fourier-basis operator".into(),
            found: format!("{:?}", other.domain()?),
        }),
    }
}

/// Hilbert–Schmidt norm of `Σ u_i ⟨v_i, ·⟩` for arbitrary (non-orthogonal) `u_i`.
fn gram_hs(left: &[CoeffVector], right: &[CoeffVector]) -> f64 {
    let mut total = 0.0;
    for i in 0..left.len() {
        for j in 0..left.len() {
            total += (left[i].pair_unchecked(&left[j]) * right[j].pair_unchecked(&right[i])).re;
        }
    }
    total.max(0.0).sqrt()
}

/// Keeps the top singular triples of a sampled kernel or matrix until the
/// Hilbert–Schmidt norm of the discarded part is at most `theta`.
pub fn svd_truncate(
    t: &CompactOperator,
    theta: f64,
    budget: Budget,
) -> Result<(FiniteRankOperator, f64)> {
    if !(theta > 0.0) {
        return Err(FredholmError::InvalidArgument(format!(
            "svd_truncate needs theta > 0, got {theta}"
        )));
    }
    // Orthonormal-coordinate matrix Ã and the scalings that map back:
    // A = W^{-1/2} Ã W^{1/2}.
    let (basis, a) = match t {
        CompactOperator::SampledKernel(k) => (k.basis().clone(), k.symmetrized()),
        CompactOperator::FiniteMatrix(m) => (m.basis().clone(), m.symmetrized()),
        other => {
            return Err(FredholmError::InvalidArgument(format!(
                "svd_truncate applies to sampled kernels and matrices, not {:?}",
                other.domain()?
            )))
        }
    };
    let n = a.nrows();
    let frob = a.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    let slack = 16.0 * f64::EPSILON * (n.max(1) as f64) * frob;
    if frob == 0.0 {
        return Ok((FiniteRankOperator::zero(basis), 0.0));
    }

    let linalg::Svd { u, sigma, v } = linalg::svd(&a)?;

    // suffix[r] = Σ_{k ≥ r} σ_k²
    let mut suffix = vec![0.0; sigma.len() + 1];
    for k in (0..sigma.len()).rev() {
        suffix[k] = suffix[k + 1] + sigma[k] * sigma[k];
    }
    let rank = (0..=sigma.len())
        .find(|&r| suffix[r].sqrt() + slack <= theta * (1.0 - ROUNDING_RESERVE))
        .ok_or(FredholmError::TargetUnreachable {
            theta,
            max_rank: budget.max_rank,
        })?;
    if rank > budget.max_rank {
        return Err(FredholmError::TargetUnreachable {
            theta,
            max_rank: budget.max_rank,
        });
    }
    let tail = suffix[rank].sqrt() + slack;

    let w = basis.weights();
    let mut left = Vec::with_capacity(rank);
    let mut right = Vec::with_capacity(rank);
    for (k, &s) in sigma.iter().enumerate().take(rank) {
        let uk = (0..n)
            .map(|j| u[(j, k)] * (s / w[j].sqrt()))
            .collect::<Vec<_>>();
        let vk = (0..n).map(|j| v[(j, k)] / w[j].sqrt()).collect::<Vec<_>>();
        left.push(CoeffVector::new(basis.clone(), uk)?);
        right.push(CoeffVector::new(basis.clone(), vk)?);
    }
    let f = FiniteRankOperator::from_orthogonal(basis, left, right)?;
    Ok((f, tail))
}

struct Part {
    finite: FiniteRankOperator,
    tail: f64,
    method: SplitMethod,
}

/// Splits `T` on the working basis with the default budget.
pub fn split(t: &CompactOperator, theta: f64, basis: &Basis) -> Result<Splitting> {
    split_with_budget(t, theta, basis, Budget::default())
}

pub fn split_with_budget(
    t: &CompactOperator,
    theta: f64,
    basis: &Basis,
    budget: Budget,
) -> Result<Splitting> {
    if !(theta > 0.0 && theta < 1.0) {
        return Err(FredholmError::InvalidArgument(format!(
            "theta must lie in (0, 1), got {theta}"
        )));
    }
    t.domain()?.accepts(basis)?;

    // A finite-rank presentation is its own F, and K vanishes identically.
    let direct = match t {
        CompactOperator::SeparableKernel(k) => Some(k.operator().clone()),
        CompactOperator::FiniteRank(f) => Some(f.clone()),
        _ => None,
    };
    let (finite, kappa, method) = match direct {
        Some(f) => (f, 0.0, SplitMethod::AlreadyFiniteRank),
        None => {
            let part = split_part(t, theta, basis, budget)?;
            let t_bound = t.norm_upper_bound().unwrap_or(0.0);
            let rounding = f64::EPSILON
                * (basis.dim() as f64)
                * (part.finite.hilbert_schmidt_norm() + t_bound);
            let kappa = part.tail + part.finite.representation_error() + rounding;
            (part.finite, kappa, part.method)
        }
    };
    if finite.rank() > budget.max_rank {
        return Err(FredholmError::NoSplitFound {
            theta,
            reason: format!("rank {} exceeds budget {}", finite.rank(), budget.max_rank),
        });
    }
    if kappa > theta {
        return Err(FredholmError::NoSplitFound {
            theta,
            reason: format!("certified remainder bound {kappa:e} exceeds theta"),
        });
    }
    let remainder = CompactOperator::sum(
        t.clone(),
        CompactOperator::scaled(C64::new(-1.0, 0.0), finite.clone().into()),
    )?;
    Ok(Splitting {
        operator: t.clone(),
        finite,
        remainder,
        kappa,
        theta,
        method,
    })
}

fn split_part(t: &CompactOperator, theta: f64, basis: &Basis, budget: Budget) -> Result<Part> {
    match t {
        CompactOperator::SeparableKernel(k) => Ok(Part {
            finite: k.operator().clone(),
            tail: 0.0,
            method: SplitMethod::AlreadyFiniteRank,
        }),
        CompactOperator::FiniteRank(f) => Ok(Part {
            finite: f.clone(),
            tail: 0.0,
            method: SplitMethod::AlreadyFiniteRank,
        }),
        CompactOperator::DiagonalMultiplier(m) => {
            let symbol = m.symbol();
            let mut chosen = None;
            for n in 0..=budget.max_index {
                if symbol.tail_bound(n as u64)? <= theta * (1.0 - ROUNDING_RESERVE) {
                    chosen = Some(n);
                    break;
                }
            }
            let n = chosen.ok_or_else(|| FredholmError::NoSplitFound {
                theta,
                reason: format!(
                    "symbol tail stays above theta up to N = {}",
                    budget.max_index
                ),
            })?;
            let (finite, tail) = fourier_project(t, n, basis)?;
            Ok(Part {
                finite,
                tail,
                method: SplitMethod::FourierProjection { max_index: n },
            })
        }
        CompactOperator::SampledKernel(_) | CompactOperator::FiniteMatrix(_) => {
            let (finite, tail) = svd_truncate(t, theta, budget).map_err(|e| match e {
                FredholmError::TargetUnreachable { .. } => FredholmError::NoSplitFound {
                    theta,
                    reason: e.to_string(),
                },
                other => other,
            })?;
            let rank = finite.rank();
            Ok(Part {
                finite,
                tail,
                method: SplitMethod::TruncatedSvd { rank },
            })
        }
        CompactOperator::Scaled(c, inner) => {
            let scale = c.norm();
            if scale == 0.0 {
                return Ok(Part {
                    finite: FiniteRankOperator::zero(basis.clone()),
                    tail: 0.0,
                    method: SplitMethod::AlreadyFiniteRank,
                });
            }
            let part = split_part(inner, theta / scale, basis, budget)?;
            Ok(Part {
                finite: part.finite.scaled(*c),
                tail: part.tail * scale,
                method: part.method,
            })
        }
        CompactOperator::Sum(a, b) => {
            let (ta, tb) = match (
                a.is_finite_rank_presentation(),
                b.is_finite_rank_presentation(),
            ) {
                (true, _) => (theta, theta),
                (_, true) => (theta, theta),
                _ => (0.5 * theta, 0.5 * theta),
            };
            let pa = split_part(a, ta, basis, budget)?;
            let pb = split_part(b, tb, basis, budget)?;
            let method = match (&pa.method, &pb.method) {
                (SplitMethod::AlreadyFiniteRank, SplitMethod::AlreadyFiniteRank) => {
                    SplitMethod::AlreadyFiniteRank
                }
                _ => SplitMethod::Combined {
                    parts: vec![pa.method, pb.method],
                },
            };
            Ok(Part {
                finite: pa.finite.sum(&pb.finite)?,
                tail: pa.tail + pb.tail,
                method,
            })
        }
    }
}

/// One row of the projection-convergence table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProbeRow {
    pub max_index: usize,
    pub measured_tail: f64,
    pub certified_tail: f64,
}

/// Number of random unit probes used in addition to the coordinate modes.
const RANDOM_PROBES: usize = 16;

/// Measures `max_x ‖(T − P_N T) x‖` over unit probes against the certified
/// tail for each `N` in `max_indices`.
///
/// Probes are every stored Fourier mode plus a fixed set of pseudo-random
/// unit vectors, so the table is deterministic.
pub fn bap_convergence_probe(
    t: &CompactOperator,
    max_indices: &[usize],
    basis: &Basis,
) -> Result<Vec<ProbeRow>> {
    t.domain()?.accepts(basis)?;
    let mut probes: Vec<CoeffVector> = (0..basis.dim())
        .map(|p| CoeffVector::unit(basis.clone(), p))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    for _ in 0..RANDOM_PROBES {
        let coeffs = (0..basis.dim())
            .map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        let v = CoeffVector::new(basis.clone(), coeffs)?;
        if let Some(u) = v.normalized() {
            probes.push(u);
        }
    }
    let images = probes
        .iter()
        .map(|x| t.apply(x))
        .collect::<Result<Vec<_>>>()?;

    max_indices
        .iter()
        .map(|&n| {
            let (_, certified) = fourier_project(t, n, basis)?;
            let measured = images
                .iter()
                .map(|tx| {
                    (0..basis.dim())
                        .filter(|&p| {
                            basis.fourier_index(p).unwrap_or(0).unsigned_abs() as usize > n
                        })
                        .map(|p| tx.coeffs()[p].norm_sqr())
                        .sum::<f64>()
                        .sqrt()
                })
                .fold(0.0, f64::max);
            Ok(ProbeRow {
                max_index: n,
                measured_tail: measured,
                certified_tail: certified,
            })
        })
        .collect()
}

/// Least-squares slope of `ln(certified_tail)` against `ln(N + 2)`, the
/// weight `1 + |n|` of the first discarded mode `|n| = N + 1`.
///
/// Rows with a zero tail are skipped; `None` if fewer than two remain.
pub fn certified_tail_slope(rows: &[ProbeRow]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.certified_tail > 0.0)
        .map(|r| ((r.max_index as f64 + 2.0).ln(), r.certified_tail.ln()))
        .collect();
    least_squares_slope(&pts)
}

pub(crate) fn least_squares_slope(pts: &[(f64, f64)]) -> Option<f64> {
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}
