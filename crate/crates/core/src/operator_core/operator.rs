use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use super::finite_rank::FiniteRankOperator;
use super::function::{KernelFn, RealFn};
use super::symbol::DiagonalMultiplier;
use super::vector::{Basis, CoeffVector};
use crate::error::{FredholmError, Result};

/// Safety factor applied to power-iteration norm estimates.
pub const POWER_ITERATION_SAFETY: f64 = 1.01;

/// One term `coeff · a(s) b(t)` of a separable kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelTerm {
    pub a: RealFn,
    pub b: RealFn,
    pub coeff: f64,
}

impl KernelTerm {
    pub fn new(a: RealFn, b: RealFn) -> Self {
        Self { a, b, coeff: 1.0 }
    }

    pub fn with_coeff(mut self, coeff: f64) -> Self {
        self.coeff = coeff;
        self
    }
}

/// `(Tx)(s) = ∫₀¹ Σ_i a_i(s) b_i(t) x(t) dt`, discretized on a Gauss grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SeparableKernel {
    terms: Option<Vec<KernelTerm>>,
    op: FiniteRankOperator,
}

impl SeparableKernel {
    pub fn new(terms: Vec<KernelTerm>, basis: &Basis) -> Result<Self> {
        let op = Self::discretize(&terms, basis)?;
        Ok(Self {
            terms: Some(terms),
            op,
        })
    }

    /// Wraps an already discretized operator; it cannot be re-sampled.
    pub fn from_operator(op: FiniteRankOperator) -> Result<Self> {
        if op.basis().nodes().is_none() {
            return Err(FredholmError::BasisMismatch {
                expected: "grid".into(),
                found: op.basis().to_string(),
            });
        }
        Ok(Self { terms: None, op })
    }

    fn discretize(terms: &[KernelTerm], basis: &Basis) -> Result<FiniteRankOperator> {
        if basis.nodes().is_none() {
            return Err(FredholmError::BasisMismatch {
                expected: "grid".into(),
                found: basis.to_string(),
            });
        }
        if terms.is_empty() {
            return Ok(FiniteRankOperator::zero(basis.clone()));
        }
        let mut left = Vec::with_capacity(terms.len());
        let mut right = Vec::with_capacity(terms.len());
        for t in terms {
            left.push(CoeffVector::from_fn(basis.clone(), |s| {
                C64::new(t.coeff * t.a.eval(s), 0.0)
            })?);
            // Real b: the functional ⟨b̄, ·⟩ is ⟨b, ·⟩.
            right.push(CoeffVector::from_fn(basis.clone(), |s| {
                C64::new(t.b.eval(s), 0.0)
            })?);
        }
        FiniteRankOperator::new(left, right)
    }

    pub fn terms(&self) -> Option<&[KernelTerm]> {
        self.terms.as_deref()
    }

    pub fn operator(&self) -> &FiniteRankOperator {
        &self.op
    }

    pub fn basis(&self) -> &Basis {
        self.op.basis()
    }
}

/// Nyström discretization `(Tx)_i = Σ_j w_j k(s_i, t_j) x_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledKernel {
    basis: Basis,
    samples: DMatrix<C64>,
    source: Option<KernelFn>,
}

impl SampledKernel {
    pub fn new(kernel: KernelFn, basis: &Basis) -> Result<Self> {
        let nodes = basis.nodes().ok_or_else(|| FredholmError::BasisMismatch {
            expected: "grid".into(),
            found: basis.to_string(),
        })?;
        let n = nodes.len();
        let samples = DMatrix::from_fn(n, n, |i, j| C64::new(kernel.eval(nodes[i], nodes[j]), 0.0));
        if samples.iter().any(|v| !v.is_finite()) {
            return Err(FredholmError::InvalidArgument(format!(
                "kernel `{}` is not finite on the grid",
                kernel.label()
            )));
        }
        Ok(Self {
            basis: basis.clone(),
            samples,
            source: Some(kernel),
        })
    }

    /// Samples `k(s_i, t_j)` given directly; not refinable.
    pub fn from_samples(basis: &Basis, samples: DMatrix<C64>) -> Result<Self> {
        if basis.nodes().is_none() {
            return Err(FredholmError::BasisMismatch {
                expected: "grid".into(),
                found: basis.to_string(),
            });
        }
        if samples.nrows() != basis.dim() || samples.ncols() != basis.dim() {
            return Err(FredholmError::ResolutionMismatch {
                expected: basis.dim(),
                found: samples.nrows(),
            });
        }
        Ok(Self {
            basis: basis.clone(),
            samples,
            source: None,
        })
    }

    pub fn basis(&self) -> &Basis {
        &self.basis
    }

    pub fn samples(&self) -> &DMatrix<C64> {
        &self.samples
    }

    pub fn source(&self) -> Option<&KernelFn> {
        self.source.as_ref()
    }

    /// `W^{1/2} K W^{1/2}`: the operator in orthonormal grid coordinates.
    pub fn symmetrized(&self) -> DMatrix<C64> {
        let w = self.basis.weights();
        DMatrix::from_fn(self.samples.nrows(), self.samples.ncols(), |i, j| {
            self.samples[(i, j)] * (w[i] * w[j]).sqrt()
        })
    }
}

/// A dense matrix acting on coefficient arrays of `basis`.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteMatrix {
    basis: Basis,
    matrix: DMatrix<C64>,
}

impl FiniteMatrix {
    /// Square matrix on `C^n` with the Euclidean inner product.
    pub fn new(matrix: DMatrix<C64>) -> Result<Self> {
        let basis = Basis::euclidean(matrix.nrows());
        Self::in_basis(basis, matrix)
    }

    pub fn from_real(matrix: DMatrix<f64>) -> Result<Self> {
        Self::new(matrix.map(|v| C64::new(v, 0.0)))
    }

    pub fn in_basis(basis: Basis, matrix: DMatrix<C64>) -> Result<Self> {
        if matrix.nrows() != basis.dim() || matrix.ncols() != basis.dim() {
            return Err(FredholmError::ResolutionMismatch {
                expected: basis.dim(),
                found: matrix.ncols(),
            });
        }
        if let Some(index) = matrix.iter().position(|v| !v.is_finite()) {
            return Err(FredholmError::NonFinite { index });
        }
        Ok(Self { basis, matrix })
    }

    pub fn basis(&self) -> &Basis {
        &self.basis
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    /// `W^{1/2} M W^{-1/2}`: the operator in orthonormal coordinates.
    pub fn symmetrized(&self) -> DMatrix<C64> {
        let w = self.basis.weights();
        DMatrix::from_fn(self.matrix.nrows(), self.matrix.ncols(), |i, j| {
            self.matrix[(i, j)] * (w[i] / w[j]).sqrt()
        })
    }
}

/// The presentations an operator `T` may come in.
#[derive(Debug, Clone, PartialEq)]
pub enum CompactOperator {
    DiagonalMultiplier(DiagonalMultiplier),
    SeparableKernel(SeparableKernel),
    SampledKernel(SampledKernel),
    FiniteMatrix(FiniteMatrix),
    FiniteRank(FiniteRankOperator),
    Sum(Box<CompactOperator>, Box<CompactOperator>),
    Scaled(C64, Box<CompactOperator>),
}

/// Where an operator can act.
#[derive(Debug, Clone, PartialEq)]
pub enum Domain {
    /// Any Fourier resolution (symbol-defined operators).
    AnyFourier,
    Fixed(Basis),
}

impl Domain {
    pub fn accepts(&self, basis: &Basis) -> Result<()> {
        match self {
            Domain::AnyFourier => match basis {
                Basis::Fourier { .. } => Ok(()),
                other => Err(FredholmError::BasisMismatch {
                    expected: "fourier".into(),
                    found: other.to_string(),
                }),
            },
            Domain::Fixed(b) => b.check_same(basis),
        }
    }
}

impl From<DiagonalMultiplier> for CompactOperator {
    fn from(m: DiagonalMultiplier) -> Self {
        Self::DiagonalMultiplier(m)
    }
}

impl From<SeparableKernel> for CompactOperator {
    fn from(k: SeparableKernel) -> Self {
        Self::SeparableKernel(k)
    }
}

impl From<SampledKernel> for CompactOperator {
    fn from(k: SampledKernel) -> Self {
        Self::SampledKernel(k)
    }
}

impl From<FiniteMatrix> for CompactOperator {
    fn from(m: FiniteMatrix) -> Self {
        Self::FiniteMatrix(m)
    }
}

impl From<FiniteRankOperator> for CompactOperator {
    fn from(f: FiniteRankOperator) -> Self {
        Self::FiniteRank(f)
    }
}

impl CompactOperator {
    /// `left + right`; the operands must share a basis.
    pub fn sum(left: CompactOperator, right: CompactOperator) -> Result<Self> {
        let op = Self::Sum(Box::new(left), Box::new(right));
        op.domain()?;
        Ok(op)
    }

    pub fn scaled(c: C64, inner: CompactOperator) -> Self {
        Self::Scaled(c, Box::new(inner))
    }

    pub fn domain(&self) -> Result<Domain> {
        Ok(match self {
            Self::DiagonalMultiplier(_) => Domain::AnyFourier,
            Self::SeparableKernel(k) => Domain::Fixed(k.basis().clone()),
            Self::SampledKernel(k) => Domain::Fixed(k.basis().clone()),
            Self::FiniteMatrix(m) => Domain::Fixed(m.basis().clone()),
            Self::FiniteRank(f) => Domain::Fixed(f.basis().clone()),
            Self::Scaled(_, inner) => inner.domain()?,
            Self::Sum(a, b) => match (a.domain()?, b.domain()?) {
                (Domain::AnyFourier, Domain::AnyFourier) => Domain::AnyFourier,
                (Domain::AnyFourier, Domain::Fixed(x)) | (Domain::Fixed(x), Domain::AnyFourier) => {
                    Domain::AnyFourier.accepts(&x)?;
                    Domain::Fixed(x)
                }
                (Domain::Fixed(x), Domain::Fixed(y)) => {
                    x.check_same(&y)?;
                    Domain::Fixed(x)
                }
            },
        })
    }

    /// True when the presentation itself is finite rank (no approximation needed).
    pub fn is_finite_rank_presentation(&self) -> bool {
        match self {
            Self::SeparableKernel(_) | Self::FiniteRank(_) => true,
            Self::Scaled(_, inner) => inner.is_finite_rank_presentation(),
            Self::Sum(a, b) => a.is_finite_rank_presentation() && b.is_finite_rank_presentation(),
            _ => false,
        }
    }

    pub fn apply(&self, x: &CoeffVector) -> Result<CoeffVector> {
        match self {
            Self::DiagonalMultiplier(m) => {
                Domain::AnyFourier.accepts(x.basis())?;
                let basis = x.basis();
                let coeffs = x
                    .coeffs()
                    .iter()
                    .enumerate()
                    .map(|(p, c)| m.value(basis.fourier_index(p).unwrap_or(0)) * c)
                    .collect();
                Ok(CoeffVector::from_parts_unchecked(basis.clone(), coeffs))
            }
            Self::SeparableKernel(k) => k.op.apply(x),
            Self::FiniteRank(f) => f.apply(x),
            Self::SampledKernel(k) => {
                k.basis.check_same(x.basis())?;
                let w = k.basis.weights();
                let n = w.len();
                let coeffs = (0..n)
                    .map(|i| {
                        (0..n)
                            .map(|j| k.samples[(i, j)] * (w[j] * x.coeffs()[j]))
                            .sum::<C64>()
                    })
                    .collect();
                Ok(CoeffVector::from_parts_unchecked(k.basis.clone(), coeffs))
            }
            Self::FiniteMatrix(m) => {
                m.basis.check_same(x.basis())?;
                let n = m.basis.dim();
                let coeffs = (0..n)
                    .map(|i| {
                        (0..n)
                            .map(|j| m.matrix[(i, j)] * x.coeffs()[j])
                            .sum::<C64>()
                    })
                    .collect();
                Ok(CoeffVector::from_parts_unchecked(m.basis.clone(), coeffs))
            }
            Self::Sum(a, b) => {
                let mut out = a.apply(x)?;
                out.axpy(C64::new(1.0, 0.0), &b.apply(x)?)?;
                Ok(out)
            }
            Self::Scaled(c, inner) => Ok(inner.apply(x)?.scaled(*c)),
        }
    }

    /// Certified `κ̄ ≥ ‖T‖` from the bound family matching the presentation.
    pub fn norm_upper_bound(&self) -> Result<f64> {
        match self {
            Self::DiagonalMultiplier(m) => m.symbol().sup_bound(),
            Self::SeparableKernel(k) => Ok(hs_with_slack(k.op.hilbert_schmidt_norm(), k.op.rank())),
            Self::FiniteRank(f) => Ok(hs_with_slack(f.hilbert_schmidt_norm(), f.rank())),
            Self::SampledKernel(k) => {
                let hs = k
                    .symmetrized()
                    .iter()
                    .map(|v| v.norm_sqr())
                    .sum::<f64>()
                    .sqrt();
                Ok(hs_with_slack(hs, k.basis.dim()))
            }
            Self::FiniteMatrix(m) => {
                let a = m.symmetrized();
                let frob = a.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
                let est = power_iteration_norm(&a);
                Ok((POWER_ITERATION_SAFETY * est).min(hs_with_slack(frob, a.nrows())))
            }
            Self::Sum(a, b) => Ok(a.norm_upper_bound()? + b.norm_upper_bound()?),
            Self::Scaled(c, inner) => Ok(c.norm() * inner.norm_upper_bound()?),
        }
    }

    /// The same operator presented on `basis`, when the presentation allows
    /// re-sampling; `Ok(None)` otherwise.
    pub fn at_basis(&self, basis: &Basis) -> Result<Option<CompactOperator>> {
        Ok(match self {
            Self::DiagonalMultiplier(_) => {
                Domain::AnyFourier.accepts(basis)?;
                Some(self.clone())
            }
            Self::SeparableKernel(k) => match &k.terms {
                Some(terms) => Some(SeparableKernel::new(terms.clone(), basis)?.into()),
                None if k.basis() == basis => Some(self.clone()),
                None => None,
            },
            Self::SampledKernel(k) => match &k.source {
                Some(src) => Some(SampledKernel::new(src.clone(), basis)?.into()),
                None if k.basis() == basis => Some(self.clone()),
                None => None,
            },
            Self::FiniteMatrix(m) => (m.basis() == basis).then(|| self.clone()),
            Self::FiniteRank(f) => {
                if f.basis() == basis {
                    Some(self.clone())
                } else if matches!(
                    (f.basis(), basis),
                    (Basis::Fourier { .. }, Basis::Fourier { .. })
                ) && basis.resolution() >= f.basis().resolution()
                {
                    Some(f.to_fourier(basis.resolution())?.into())
                } else {
                    None
                }
            }
            Self::Sum(a, b) => match (a.at_basis(basis)?, b.at_basis(basis)?) {
                (Some(a), Some(b)) => Some(Self::sum(a, b)?),
                _ => None,
            },
            Self::Scaled(c, inner) => inner.at_basis(basis)?.map(|i| Self::scaled(*c, i)),
        })
    }

    /// Evaluates `T x` on the finer `target` basis using only the data of `x`
    /// (Nyström interpolation for kernels, zero-padding for Fourier data).
    pub fn apply_lifted(&self, x: &CoeffVector, target: &Basis) -> Result<Option<CoeffVector>> {
        if x.basis() == target {
            return self.apply(x).map(Some);
        }
        Ok(match self {
            Self::DiagonalMultiplier(_) => {
                if target.resolution() < x.resolution() {
                    return Ok(None);
                }
                Some(self.apply(&x.to_fourier(target.resolution())?)?)
            }
            Self::FiniteRank(f) => {
                let fx = f.apply(x)?;
                match (fx.basis(), target) {
                    (Basis::Fourier { .. }, Basis::Fourier { max_index })
                        if *max_index >= fx.resolution() =>
                    {
                        Some(fx.to_fourier(*max_index)?)
                    }
                    _ => None,
                }
            }
            Self::SeparableKernel(k) => {
                let Some(terms) = &k.terms else {
                    return Ok(None);
                };
                k.basis().check_same(x.basis())?;
                let nodes = x.basis().nodes().unwrap_or(&[]);
                let Some(fine) = target.nodes() else {
                    return Ok(None);
                };
                let w = x.basis().weights();
                let mut out = CoeffVector::zeros(target.clone());
                for t in terms {
                    let moment: C64 = nodes
                        .iter()
                        .zip(&w)
                        .zip(x.coeffs())
                        .map(|((&s, &wj), xj)| xj * (wj * t.b.eval(s)))
                        .sum();
                    for (o, &s) in out.coeffs_mut().iter_mut().zip(fine) {
                        *o += moment * (t.coeff * t.a.eval(s));
                    }
                }
                Some(out)
            }
            Self::SampledKernel(k) => {
                let Some(src) = &k.source else {
                    return Ok(None);
                };
                k.basis.check_same(x.basis())?;
                let nodes = x.basis().nodes().unwrap_or(&[]);
                let Some(fine) = target.nodes() else {
                    return Ok(None);
                };
                let w = x.basis().weights();
                let coeffs = fine
                    .iter()
                    .map(|&s| {
                        nodes
                            .iter()
                            .zip(&w)
                            .zip(x.coeffs())
                            .map(|((&t, &wj), xj)| xj * (wj * src.eval(s, t)))
                            .sum()
                    })
                    .collect();
                Some(CoeffVector::from_parts_unchecked(target.clone(), coeffs))
            }
            Self::FiniteMatrix(_) => None,
            Self::Sum(a, b) => match (a.apply_lifted(x, target)?, b.apply_lifted(x, target)?) {
                (Some(mut l), Some(r)) => {
                    l.axpy(C64::new(1.0, 0.0), &r)?;
                    Some(l)
                }
                _ => None,
            },
            Self::Scaled(c, inner) => inner.apply_lifted(x, target)?.map(|v| v.scaled(*c)),
        })
    }
}

/// Inflates a computed Hilbert–Schmidt norm by its own rounding error.
fn hs_with_slack(hs: f64, terms: usize) -> f64 {
    hs * (1.0 + 8.0 * f64::EPSILON * (terms.max(1) as f64))
}

/// Largest singular value estimate by power iteration on `AᴴA`.
fn power_iteration_norm(a: &DMatrix<C64>) -> f64 {
    let n = a.ncols();
    if n == 0 || a.iter().all(|v| v.norm() == 0.0) {
        return 0.0;
    }
    // Deterministic start with no special alignment.
    let mut x = nalgebra::DVector::from_fn(n, |i, _| {
        C64::new(1.0 + ((i as f64 + 1.0) * 0.618_033_988_75).fract(), 0.0)
    });
    x /= C64::new(x.norm(), 0.0);
    let mut est = 0.0;
    for _ in 0..1000 {
        let y = a * &x;
        let z = a.adjoint() * &y;
        let zn = z.norm();
        let next = y.norm();
        if zn == 0.0 {
            break;
        }
        x = z / C64::new(zn, 0.0);
        if (next - est).abs() <= 1e-15 * next {
            est = next;
            break;
        }
        est = next;
    }
    est
}
