//! Rank checks of the injective ⇔ surjective statements on small matrices,
//! and a dense direct solver used as an independent oracle.
//!
//! Integer matrices are ranked exactly by fraction-free elimination; other
//! matrices count singular values below `1e−10 · scale` as zero.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{FredholmError, Result};
use crate::linalg;
use crate::operator_core::{CoeffVector, CompactOperator, C64};

/// Relative threshold for numerical rank.
pub const RANK_TOL: f64 = 1e-10;
/// Largest accepted condition number of `R` in [`corollary_check`].
pub const MAX_CONDITION: f64 = 1e12;

/// Exact rank and pivot columns of an integer-valued matrix, or `None` if an
/// entry is not an integer or the elimination would overflow.
pub fn exact_rank(m: &DMatrix<f64>) -> Option<(usize, Vec<usize>)> {
    const LIMIT: f64 = (1u64 << 40) as f64;
    let mut a: Vec<Vec<i128>> = Vec::with_capacity(m.nrows());
    for i in 0..m.nrows() {
        let mut row = Vec::with_capacity(m.ncols());
        for j in 0..m.ncols() {
            let v = m[(i, j)];
            if v.fract() != 0.0 || v.abs() > LIMIT {
                return None;
            }
            row.push(v as i128);
        }
        a.push(row);
    }
    // Bareiss elimination to echelon form; every entry stays a minor.
    let (rows, cols) = (m.nrows(), m.ncols());
    let mut prev: i128 = 1;
    let mut rank = 0;
    let mut pivots = Vec::new();
    for col in 0..cols {
        if rank == rows {
            break;
        }
        let Some(p) = (rank..rows).find(|&r| a[r][col] != 0) else {
            continue;
        };
        a.swap(rank, p);
        let piv = a[rank][col];
        for i in rank + 1..rows {
            let lead = a[i][col];
            for j in col + 1..cols {
                let num = a[i][j]
                    .checked_mul(piv)?
                    .checked_sub(lead.checked_mul(a[rank][j])?)?;
                if num % prev != 0 {
                    return None;
                }
                a[i][j] = num / prev;
            }
            a[i][col] = 0;
        }
        prev = piv;
        pivots.push(col);
        rank += 1;
    }
    Some((rank, pivots))
}

fn singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    if m.is_empty() {
        return Vec::new();
    }
    linalg::singular_values(m).unwrap_or_else(|_| {
        let mut sv: Vec<f64> = m.singular_values().iter().copied().collect();
        sv.sort_by(|a, b| b.total_cmp(a));
        sv
    })
}

/// Number of singular values above `RANK_TOL · scale`.
pub fn numerical_rank(m: &DMatrix<f64>, scale: f64) -> usize {
    singular_values(m)
        .into_iter()
        .filter(|&s| s > RANK_TOL * scale)
        .count()
}

/// Exact rank for integer data, else numerical rank against `scale`.
fn rank(m: &DMatrix<f64>, scale: f64) -> usize {
    match exact_rank(m) {
        Some((r, _)) => r,
        None => numerical_rank(m, scale),
    }
}

fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    singular_values(m).first().copied().unwrap_or(0.0)
}

/// Orthonormal basis `Q` of `M = ran S` and the matrix `Qᵀ (I − S) Q` of
/// `(I − S)|_M`.
pub fn restrict_to_range(s: &DMatrix<f64>) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    check_square(s)?;
    let n = s.nrows();
    let dim_m = match exact_rank(s) {
        Some((r, _)) => r,
        None => numerical_rank(s, spectral_norm(s)),
    };
    if dim_m == 0 {
        return Ok((DMatrix::zeros(n, 0), DMatrix::zeros(0, 0)));
    }
    let u = linalg::svd(s)?.u;
    let q = u.columns(0, dim_m).into_owned();
    let i_minus_s = DMatrix::identity(n, n) - s;
    let restricted = q.transpose() * i_minus_s * &q;
    Ok((q, restricted))
}

fn check_square(m: &DMatrix<f64>) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(FredholmError::InvalidArgument(format!(
            "expected a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    if m.iter().any(|v| !v.is_finite()) {
        let index = m.iter().position(|v| !v.is_finite()).unwrap_or(0);
        return Err(FredholmError::NonFinite { index });
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LemmaReport {
    pub inj_v: bool,
    pub inj_m: bool,
    pub surj_v: bool,
    pub surj_m: bool,
    pub rank_s: usize,
    pub rank_i_minus_s: usize,
    pub rank_restricted: usize,
    pub dim_m: usize,
    /// Ranks were computed in exact integer arithmetic.
    pub exact: bool,
}

/// Injectivity and surjectivity of `I − S` on `V` and on `M = ran S`.
///
/// On `V`: injective iff full column rank, surjective iff full row rank.
/// On `M`: injective iff `(I − S)` keeps a basis of `M` independent,
/// surjective iff its image of that basis spans `M` again.
pub fn lemma_equivalences(s: &DMatrix<f64>) -> Result<LemmaReport> {
    check_square(s)?;
    let n = s.nrows();
    let i_minus_s = DMatrix::identity(n, n) - s;
    let report = match exact_rank(s) {
        Some((rank_s, pivots)) => {
            let col_rank = exact_rank(&i_minus_s).expect("integer data").0;
            let row_rank = exact_rank(&i_minus_s.transpose()).expect("integer data").0;
            let c = s.select_columns(&pivots);
            let image = &i_minus_s * &c;
            let rank_image = exact_rank(&image).expect("integer data").0;
            let mut joined = DMatrix::zeros(n, 2 * rank_s);
            joined.columns_mut(0, rank_s).copy_from(&image);
            joined.columns_mut(rank_s, rank_s).copy_from(&c);
            let rank_joined = exact_rank(&joined).expect("integer data").0;
            LemmaReport {
                inj_v: col_rank == n,
                surj_v: row_rank == n,
                inj_m: rank_image == rank_s,
                surj_m: rank_joined == rank_image,
                rank_s,
                rank_i_minus_s: col_rank,
                rank_restricted: rank_image,
                dim_m: rank_s,
                exact: true,
            }
        }
        None => {
            let scale = 1.0 + spectral_norm(s);
            let (q, restricted) = restrict_to_range(s)?;
            let dim_m = q.ncols();
            let col_rank = numerical_rank(&i_minus_s, scale);
            let row_rank = numerical_rank(&i_minus_s.transpose(), scale);
            let r_col = numerical_rank(&restricted, scale);
            let r_row = numerical_rank(&restricted.transpose(), scale);
            LemmaReport {
                inj_v: col_rank == n,
                surj_v: row_rank == n,
                inj_m: r_col == dim_m,
                surj_m: r_row == dim_m,
                rank_s: dim_m,
                rank_i_minus_s: col_rank,
                rank_restricted: r_col,
                dim_m,
                exact: false,
            }
        }
    };
    let consistent = report.inj_v == report.surj_v
        && report.inj_m == report.surj_m
        && report.inj_v == report.inj_m;
    if !consistent {
        return Err(FredholmError::EquivalenceViolated(format!("{report:?}")));
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorollaryReport {
    pub injective: bool,
    pub surjective: bool,
    pub rank_r_minus_f: usize,
    pub rank_i_minus_s: usize,
    pub rank_r: usize,
    pub condition: f64,
}

/// Checks that `R − F` is injective exactly when surjective, and that
/// `rank(R − F) = rank(I − S)` for `S = F R⁻¹`.
pub fn corollary_check(r: &DMatrix<f64>, f: &DMatrix<f64>) -> Result<CorollaryReport> {
    check_square(r)?;
    check_square(f)?;
    if r.nrows() != f.nrows() {
        return Err(FredholmError::InvalidArgument(format!(
            "R is {0}x{0} but F is {1}x{1}",
            r.nrows(),
            f.nrows()
        )));
    }
    let n = r.nrows();
    let sv = singular_values(r);
    let condition = match (sv.first(), sv.last()) {
        (Some(&hi), Some(&lo)) if lo > 0.0 => hi / lo,
        (None, None) => 1.0,
        _ => f64::INFINITY,
    };
    if !(condition < MAX_CONDITION) {
        return Err(FredholmError::RNotInvertible { condition });
    }
    let r_inv = r
        .clone()
        .try_inverse()
        .ok_or(FredholmError::RNotInvertible { condition })?;
    let s = f * &r_inv;
    let r_minus_f = r - f;
    let scale = spectral_norm(r) + spectral_norm(f);
    let col_rank = rank(&r_minus_f, scale);
    let row_rank = rank(&r_minus_f.transpose(), scale);
    let rank_r = rank(r, spectral_norm(r));
    let i_minus_s = DMatrix::identity(n, n) - &s;
    let rank_i_minus_s = numerical_rank(&i_minus_s, 1.0 + spectral_norm(&s));
    let report = CorollaryReport {
        injective: col_rank == n,
        surjective: row_rank == n,
        rank_r_minus_f: col_rank,
        rank_i_minus_s,
        rank_r,
        condition,
    };
    if report.injective != report.surjective
        || report.rank_r_minus_f != report.rank_i_minus_s
        || report.rank_r != n
    {
        return Err(FredholmError::EquivalenceViolated(format!("{report:?}")));
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq)]
pub enum OracleResult {
    Solution(CoeffVector),
    /// Unit null vector of `I − T`.
    Singular(CoeffVector),
}

/// Assembles the full matrix of `I − T` from unit-vector applies and solves
/// by LU, or returns a null vector when `σ_min < 1e−10 · ‖I − T‖`.
pub fn dense_oracle_solve(t: &CompactOperator, y: &CoeffVector) -> Result<OracleResult> {
    let basis = y.basis().clone();
    let n = basis.dim();
    let mut m = DMatrix::<C64>::identity(n, n);
    for j in 0..n {
        let col = t.apply(&CoeffVector::unit(basis.clone(), j))?;
        for (i, v) in col.coeffs().iter().enumerate() {
            m[(i, j)] -= v;
        }
    }
    // Singular values in the orthonormal frame W^{1/2}.
    let w: Vec<f64> = basis.weights().iter().map(|v| v.sqrt()).collect();
    let sym = DMatrix::from_fn(n, n, |i, j| m[(i, j)] * (w[i] / w[j]));
    let svd = linalg::svd(&sym)?;
    let k_min = n.saturating_sub(1);
    let lo = svd.sigma.last().copied().unwrap_or(0.0);
    let hi = svd.sigma.first().copied().unwrap_or(0.0);
    if lo < RANK_TOL * hi || hi == 0.0 {
        let coeffs = (0..n).map(|j| svd.v[(j, k_min)] / w[j]).collect();
        let v = CoeffVector::new(basis, coeffs)?;
        let v = v
            .normalized()
            .ok_or(FredholmError::DegenerateBasis)?
            .with_canonical_phase();
        return Ok(OracleResult::Singular(v));
    }
    let rhs = nalgebra::DVector::from_column_slice(y.coeffs());
    let x = m.lu().solve(&rhs).ok_or(FredholmError::DegenerateBasis)?;
    Ok(OracleResult::Solution(CoeffVector::new(
        basis,
        x.as_slice().to_vec(),
    )?))
}

/// Random test matrices for the lemma suite.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LemmaFamily {
    /// Entries in `{−2, …, 2}`.
    SmallIntegers,
    /// Entries uniform in `[−1, 1]`.
    Continuous,
    /// `X Yᵀ` with small integer factors.
    LowRankInteger,
    /// `I − X Yᵀ`, so `I − S` has planted kernel.
    PlantedInteger,
    /// `Q diag(λ) Qᵀ` with some `λ = 1` and some `λ = 0`.
    OrthogonalSpectrum,
}

impl LemmaFamily {
    pub const ALL: [LemmaFamily; 5] = [
        Self::SmallIntegers,
        Self::Continuous,
        Self::LowRankInteger,
        Self::PlantedInteger,
        Self::OrthogonalSpectrum,
    ];
}

fn int_matrix(rng: &mut impl Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-2..=2) as f64)
}

fn uniform_matrix(rng: &mut impl Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..=1.0))
}

pub fn random_lemma_matrix(rng: &mut impl Rng, family: LemmaFamily) -> DMatrix<f64> {
    let n = rng.random_range(1..=8);
    match family {
        LemmaFamily::SmallIntegers => int_matrix(rng, n, n),
        LemmaFamily::Continuous => uniform_matrix(rng, n, n),
        LemmaFamily::LowRankInteger => {
            let k = rng.random_range(0..=n);
            int_matrix(rng, n, k) * int_matrix(rng, n, k).transpose()
        }
        LemmaFamily::PlantedInteger => {
            let k = rng.random_range(1..=n);
            DMatrix::identity(n, n) - int_matrix(rng, n, k) * int_matrix(rng, n, k).transpose()
        }
        LemmaFamily::OrthogonalSpectrum => {
            let q = uniform_matrix(rng, n, n).qr().q();
            let lambda = nalgebra::DVector::from_fn(n, |_, _| match rng.random_range(0..3) {
                0 => 1.0,
                1 => 0.0,
                _ => rng.random_range(-1.5..1.5),
            });
            &q * DMatrix::from_diagonal(&lambda) * q.transpose()
        }
    }
}

/// A random `(R, F)` with `R = I + 0.1 P` and `rank F ≤ 3`. Planted pairs
/// use `F = R u wᵀ` with `wᵀ u = 1`, so `R − F` is singular.
pub fn random_corollary_pair(rng: &mut impl Rng) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = rng.random_range(1..=8);
    let r = DMatrix::identity(n, n) + uniform_matrix(rng, n, n) * 0.1;
    let f = if rng.random_bool(0.5) {
        let k = rng.random_range(0..=3.min(n));
        uniform_matrix(rng, n, k) * uniform_matrix(rng, n, k).transpose()
    } else {
        let u = uniform_matrix(rng, n, 1);
        let mut w = uniform_matrix(rng, n, 1);
        let wu = (w.transpose() * &u)[(0, 0)];
        let uu = u.norm_squared();
        // Shift w along u so that wᵀu = 1.
        w += &u * ((1.0 - wu) / uu);
        &r * u * w.transpose()
    };
    (r, f)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteSummary {
    pub cases: usize,
    pub seed: u64,
    pub exact_cases: usize,
    /// Cases where `I − S` (or `R − F`) was invertible.
    pub invertible: usize,
    pub violations: usize,
    pub first_violation: Option<String>,
}

/// Runs `lemma_equivalences` over `cases` random matrices cycling through
/// every [`LemmaFamily`].
pub fn run_lemma_suite(cases: usize, seed: u64) -> SuiteSummary {
    run_lemma_suite_with(cases, seed, &LemmaFamily::ALL)
}

/// As [`run_lemma_suite`], cycling through `families` only.
pub fn run_lemma_suite_with(cases: usize, seed: u64, families: &[LemmaFamily]) -> SuiteSummary {
    let families = if families.is_empty() {
        &LemmaFamily::ALL[..]
    } else {
        families
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut summary = SuiteSummary {
        cases,
        seed,
        exact_cases: 0,
        invertible: 0,
        violations: 0,
        first_violation: None,
    };
    for i in 0..cases {
        let family = families[i % families.len()];
        let s = random_lemma_matrix(&mut rng, family);
        match lemma_equivalences(&s) {
            Ok(rep) => {
                summary.exact_cases += rep.exact as usize;
                summary.invertible += rep.inj_v as usize;
            }
            Err(e) => {
                summary.violations += 1;
                summary.first_violation.get_or_insert_with(|| e.to_string());
            }
        }
    }
    summary
}

/// Runs `corollary_check` over `cases` random pairs.
pub fn run_corollary_suite(cases: usize, seed: u64) -> SuiteSummary {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut summary = SuiteSummary {
        cases,
        seed,
        exact_cases: 0,
        invertible: 0,
        violations: 0,
        first_violation: None,
    };
    for _ in 0..cases {
        let (r, f) = random_corollary_pair(&mut rng);
        match corollary_check(&r, &f) {
            Ok(rep) => summary.invertible += rep.injective as usize,
            Err(e) => {
                summary.violations += 1;
                summary.first_violation.get_or_insert_with(|| e.to_string());
            }
        }
    }
    summary
}
