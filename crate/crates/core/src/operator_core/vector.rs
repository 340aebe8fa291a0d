use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64 as C64;

use super::function::RealFn;
use super::quadrature::GaussGrid;
use crate::error::{FredholmError, Result};

/// Coordinate system of the truncated model space.
#[derive(Debug, Clone)]
pub enum Basis {
    /// Fourier modes `-max_index..=max_index` on the circle, orthonormal.
    Fourier { max_index: usize },
    /// Point values at Gauss–Legendre nodes on `[0, 1]`, weighted inner product.
    Grid(Arc<GaussGrid>),
    /// Plain coordinates of `C^dim` with the Euclidean inner product.
    Euclidean { dim: usize },
}

impl Basis {
    pub fn fourier(max_index: usize) -> Self {
        Self::Fourier { max_index }
    }

    pub fn grid(nodes: usize) -> Self {
        Self::Grid(Arc::new(GaussGrid::new(nodes)))
    }

    pub fn euclidean(dim: usize) -> Self {
        Self::Euclidean { dim }
    }

    /// Number of stored coefficients.
    pub fn dim(&self) -> usize {
        match self {
            Self::Fourier { max_index } => 2 * max_index + 1,
            Self::Grid(g) => g.len(),
            Self::Euclidean { dim } => *dim,
        }
    }

    /// Fourier max index, grid node count, or Euclidean dimension.
    pub fn resolution(&self) -> usize {
        match self {
            Self::Fourier { max_index } => *max_index,
            Self::Grid(g) => g.len(),
            Self::Euclidean { dim } => *dim,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Self::Fourier { .. } => "fourier",
            Self::Grid(_) => "grid",
            Self::Euclidean { .. } => "euclidean",
        }
    }

    /// Quadrature weight of coordinate `i` (one outside the grid basis).
    #[inline]
    pub fn weight(&self, i: usize) -> f64 {
        match self {
            Self::Grid(g) => g.weights()[i],
            _ => 1.0,
        }
    }

    pub fn weights(&self) -> Vec<f64> {
        match self {
            Self::Grid(g) => g.weights().to_vec(),
            _ => vec![1.0; self.dim()],
        }
    }

    pub fn nodes(&self) -> Option<&[f64]> {
        match self {
            Self::Grid(g) => Some(g.nodes()),
            _ => None,
        }
    }

    /// The same kind of basis at twice the resolution, when that is meaningful.
    pub fn refined(&self) -> Option<Basis> {
        match self {
            Self::Fourier { max_index } => Some(Self::fourier((2 * max_index).max(1))),
            Self::Grid(g) => Some(Self::grid(2 * g.len())),
            Self::Euclidean { .. } => None,
        }
    }

    /// Storage position of Fourier mode `n`, if stored.
    pub fn fourier_position(&self, n: i64) -> Option<usize> {
        match self {
            Self::Fourier { max_index } if n.unsigned_abs() as usize <= *max_index => {
                Some((n + *max_index as i64) as usize)
            }
            _ => None,
        }
    }

    /// Fourier mode stored at position `pos`.
    pub fn fourier_index(&self, pos: usize) -> Option<i64> {
        match self {
            Self::Fourier { max_index } => Some(pos as i64 - *max_index as i64),
            _ => None,
        }
    }

    pub fn check_same(&self, other: &Basis) -> Result<()> {
        if self.kind() != other.kind() {
            return Err(FredholmError::BasisMismatch {
                expected: self.to_string(),
                found: other.to_string(),
            });
        }
        if self.resolution() != other.resolution() {
            return Err(FredholmError::ResolutionMismatch {
                expected: self.resolution(),
                found: other.resolution(),
            });
        }
        Ok(())
    }
}

impl PartialEq for Basis {
    fn eq(&self, other: &Self) -> bool {
        self.kind() == other.kind() && self.resolution() == other.resolution()
    }
}

impl fmt::Display for Basis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Fourier { max_index } => write!(f, "fourier(N={max_index})"),
            Self::Grid(g) => write!(f, "grid(n={})", g.len()),
            Self::Euclidean { dim } => write!(f, "euclidean(d={dim})"),
        }
    }
}

/// A vector of the truncated model space.
#[derive(Debug, Clone, PartialEq)]
pub struct CoeffVector {
    basis: Basis,
    coeffs: Vec<C64>,
}

impl CoeffVector {
    pub fn new(basis: Basis, coeffs: Vec<C64>) -> Result<Self> {
        if coeffs.len() != basis.dim() {
            return Err(FredholmError::ResolutionMismatch {
                expected: basis.dim(),
                found: coeffs.len(),
            });
        }
        if let Some(index) = coeffs.iter().position(|c| !c.is_finite()) {
            return Err(FredholmError::NonFinite { index });
        }
        Ok(Self { basis, coeffs })
    }

    pub(crate) fn from_parts_unchecked(basis: Basis, coeffs: Vec<C64>) -> Self {
        debug_assert_eq!(coeffs.len(), basis.dim());
        Self { basis, coeffs }
    }

    pub fn from_real(basis: Basis, values: &[f64]) -> Result<Self> {
        Self::new(basis, values.iter().map(|&v| C64::new(v, 0.0)).collect())
    }

    pub fn zeros(basis: Basis) -> Self {
        let n = basis.dim();
        Self {
            basis,
            coeffs: vec![C64::new(0.0, 0.0); n],
        }
    }

    /// Coordinate vector with a single one at storage position `pos`.
    pub fn unit(basis: Basis, pos: usize) -> Self {
        let mut v = Self::zeros(basis);
        v.coeffs[pos] = C64::new(1.0, 0.0);
        v
    }

    /// The Fourier mode `e_n` at max index `max_index`.
    pub fn fourier_mode(max_index: usize, n: i64) -> Result<Self> {
        let basis = Basis::fourier(max_index);
        let pos = basis
            .fourier_position(n)
            .ok_or(FredholmError::ResolutionMismatch {
                expected: max_index,
                found: n.unsigned_abs() as usize,
            })?;
        Ok(Self::unit(basis, pos))
    }

    /// Samples a function at the nodes of a grid basis.
    pub fn from_fn(basis: Basis, f: impl Fn(f64) -> C64) -> Result<Self> {
        let nodes = basis.nodes().ok_or_else(|| FredholmError::BasisMismatch {
            expected: "grid".into(),
            found: basis.to_string(),
        })?;
        let coeffs = nodes.iter().map(|&s| f(s)).collect();
        Self::new(basis, coeffs)
    }

    pub fn basis(&self) -> &Basis {
        &self.basis
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    pub(crate) fn coeffs_mut(&mut self) -> &mut [C64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<C64> {
        self.coeffs
    }

    pub fn resolution(&self) -> usize {
        self.basis.resolution()
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Coefficient of Fourier mode `n`; zero when not stored.
    pub fn fourier_coeff(&self, n: i64) -> C64 {
        self.basis
            .fourier_position(n)
            .map_or(C64::new(0.0, 0.0), |p| self.coeffs[p])
    }

    /// Squared norm in the basis' inner product.
    pub fn norm_sqr(&self) -> f64 {
        match &self.basis {
            Basis::Grid(g) => self
                .coeffs
                .iter()
                .zip(g.weights())
                .map(|(c, &w)| w * (c.re * c.re + c.im * c.im))
                .sum(),
            _ => self.coeffs.iter().map(|c| c.re * c.re + c.im * c.im).sum(),
        }
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// `⟨self, x⟩`, conjugate-linear in `self`.
    pub fn pair(&self, x: &CoeffVector) -> Result<C64> {
        self.basis.check_same(&x.basis)?;
        Ok(self.pair_unchecked(x))
    }

    pub(crate) fn pair_unchecked(&self, x: &CoeffVector) -> C64 {
        match &self.basis {
            Basis::Grid(g) => self
                .coeffs
                .iter()
                .zip(&x.coeffs)
                .zip(g.weights())
                .map(|((v, x), &w)| v.conj() * x * w)
                .sum(),
            _ => self
                .coeffs
                .iter()
                .zip(&x.coeffs)
                .map(|(v, x)| v.conj() * x)
                .sum(),
        }
    }

    pub fn scaled(&self, c: C64) -> Self {
        Self {
            basis: self.basis.clone(),
            coeffs: self.coeffs.iter().map(|x| x * c).collect(),
        }
    }

    /// `self += c * x`.
    pub fn axpy(&mut self, c: C64, x: &CoeffVector) -> Result<()> {
        self.basis.check_same(&x.basis)?;
        self.axpy_unchecked(c, x);
        Ok(())
    }

    pub(crate) fn axpy_unchecked(&mut self, c: C64, x: &CoeffVector) {
        for (a, b) in self.coeffs.iter_mut().zip(&x.coeffs) {
            *a += c * b;
        }
    }

    pub fn add(&self, x: &CoeffVector) -> Result<Self> {
        let mut out = self.clone();
        out.axpy(C64::new(1.0, 0.0), x)?;
        Ok(out)
    }

    pub fn sub(&self, x: &CoeffVector) -> Result<Self> {
        let mut out = self.clone();
        out.axpy(C64::new(-1.0, 0.0), x)?;
        Ok(out)
    }

    /// Unit vector in the direction of `self`, or `None` for the zero vector.
    pub fn normalized(&self) -> Option<Self> {
        let n = self.norm();
        (n > 0.0).then(|| self.scaled(C64::new(1.0 / n, 0.0)))
    }

    /// Rotates the global phase so the largest-magnitude coefficient is real and positive.
    pub fn with_canonical_phase(&self) -> Self {
        let Some(big) = self
            .coeffs
            .iter()
            .copied()
            .max_by(|a, b| a.norm_sqr().total_cmp(&b.norm_sqr()))
        else {
            return self.clone();
        };
        if big.norm() == 0.0 {
            return self.clone();
        }
        self.scaled(big.conj() / big.norm())
    }

    /// Re-embeds a Fourier vector at another max index (zero-pads or truncates).
    pub fn to_fourier(&self, max_index: usize) -> Result<Self> {
        let Basis::Fourier { max_index: own } = self.basis else {
            return Err(FredholmError::BasisMismatch {
                expected: "fourier".into(),
                found: self.basis.to_string(),
            });
        };
        let basis = Basis::fourier(max_index);
        let mut out = Self::zeros(basis);
        let m = own.min(max_index) as i64;
        for n in -m..=m {
            let src = (n + own as i64) as usize;
            let dst = (n + max_index as i64) as usize;
            out.coeffs[dst] = self.coeffs[src];
        }
        Ok(out)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.re == 0.0 && c.im == 0.0)
    }
}

/// A recipe for a vector that can be sampled at any resolution.
#[derive(Debug, Clone, PartialEq)]
pub enum VectorSpec {
    /// `Σ c_k s^k` sampled on a grid.
    Poly(Vec<f64>),
    /// Sparse Fourier coefficients, index -> value.
    Fourier(BTreeMap<i64, C64>),
    /// `x̂(n) = scale · (1 + |n|)^(-exponent)`.
    PowerDecay { exponent: f64, scale: f64 },
    /// A named function of `s` sampled on a grid.
    Function(RealFn),
    /// Fixed coefficients; Fourier data can be re-embedded, grid data cannot.
    Explicit(CoeffVector),
}

impl VectorSpec {
    pub fn sample(&self, basis: &Basis) -> Result<CoeffVector> {
        let mismatch = |expected: &str| FredholmError::BasisMismatch {
            expected: expected.into(),
            found: basis.to_string(),
        };
        match self {
            Self::Poly(c) => {
                if basis.nodes().is_none() {
                    return Err(mismatch("grid"));
                }
                let p = RealFn::Poly(c.clone());
                CoeffVector::from_fn(basis.clone(), |s| C64::new(p.eval(s), 0.0))
            }
            Self::Function(f) => CoeffVector::from_fn(basis.clone(), |s| C64::new(f.eval(s), 0.0)),
            Self::Fourier(map) => {
                if !matches!(basis, Basis::Fourier { .. }) {
                    return Err(mismatch("fourier"));
                }
                let mut v = CoeffVector::zeros(basis.clone());
                for (&n, &c) in map {
                    let pos =
                        basis
                            .fourier_position(n)
                            .ok_or(FredholmError::ResolutionMismatch {
                                expected: basis.resolution(),
                                found: n.unsigned_abs() as usize,
                            })?;
                    v.coeffs[pos] = c;
                }
                CoeffVector::new(basis.clone(), v.coeffs)
            }
            Self::PowerDecay { exponent, scale } => {
                if !matches!(basis, Basis::Fourier { .. }) {
                    return Err(mismatch("fourier"));
                }
                let coeffs = (0..basis.dim())
                    .map(|p| {
                        let n = basis.fourier_index(p).unwrap_or(0);
                        C64::new(scale * (1.0 + n.unsigned_abs() as f64).powf(-exponent), 0.0)
                    })
                    .collect();
                CoeffVector::new(basis.clone(), coeffs)
            }
            Self::Explicit(v) => {
                if v.basis() == basis {
                    Ok(v.clone())
                } else if matches!(v.basis(), Basis::Fourier { .. })
                    && matches!(basis, Basis::Fourier { .. })
                    && basis.resolution() >= v.resolution()
                {
                    v.to_fourier(basis.resolution())
                } else {
                    v.basis().check_same(basis)?;
                    unreachable!("check_same accepts only equal bases")
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn fourier_orthonormality() {
        let e0 = CoeffVector::fourier_mode(4, 0).unwrap();
        let e1 = CoeffVector::fourier_mode(4, 1).unwrap();
        let e2 = CoeffVector::fourier_mode(4, 2).unwrap();
        assert_eq!(e0.pair(&e0).unwrap(), c(1.0, 0.0));
        assert_eq!(e1.pair(&e2).unwrap(), c(0.0, 0.0));
        assert_eq!(e0.len(), 9);
    }

    #[test]
    fn grid_constant_pairs_to_interval_length() {
        let b = Basis::grid(4);
        let one = CoeffVector::from_fn(b, |_| c(1.0, 0.0)).unwrap();
        assert!((one.pair(&one).unwrap().re - 1.0).abs() < 1e-14);
    }

    #[test]
    fn pair_is_conjugate_linear_in_first_slot() {
        let b = Basis::fourier(1);
        let v = CoeffVector::new(b.clone(), vec![c(1.0, 2.0), c(0.0, -1.0), c(3.0, 0.5)]).unwrap();
        let x = CoeffVector::new(b, vec![c(-1.0, 1.0), c(2.0, 2.0), c(0.5, 0.0)]).unwrap();
        let a = c(0.3, -1.7);
        let lhs = v.scaled(a).pair(&x).unwrap();
        let rhs = a.conj() * v.pair(&x).unwrap();
        assert!((lhs - rhs).norm() < 1e-14);
        let lhs = v.pair(&x.scaled(a)).unwrap();
        let rhs = a * v.pair(&x).unwrap();
        assert!((lhs - rhs).norm() < 1e-14);
    }

    #[test]
    fn mismatches_are_reported() {
        let f = CoeffVector::zeros(Basis::fourier(2));
        let g = CoeffVector::zeros(Basis::grid(5));
        let f3 = CoeffVector::zeros(Basis::fourier(3));
        assert!(matches!(
            f.pair(&g),
            Err(FredholmError::BasisMismatch { .. })
        ));
        assert!(matches!(
            f.pair(&f3),
            Err(FredholmError::ResolutionMismatch { .. })
        ));
    }

    #[test]
    fn rejects_non_finite() {
        let r = CoeffVector::new(Basis::euclidean(2), vec![c(1.0, 0.0), c(f64::NAN, 0.0)]);
        assert_eq!(r, Err(FredholmError::NonFinite { index: 1 }));
    }

    #[test]
    fn fourier_reembedding() {
        let v = VectorSpec::Fourier([(1, c(2.0, 0.0)), (-1, c(0.0, 1.0))].into())
            .sample(&Basis::fourier(1))
            .unwrap();
        let w = v.to_fourier(3).unwrap();
        assert_eq!(w.fourier_coeff(1), c(2.0, 0.0));
        assert_eq!(w.fourier_coeff(-1), c(0.0, 1.0));
        assert_eq!(w.norm_sqr(), v.norm_sqr());
        let back = VectorSpec::Explicit(v.clone())
            .sample(&Basis::fourier(3))
            .unwrap();
        assert_eq!(back, w);
    }

    #[test]
    fn canonical_phase_makes_peak_positive() {
        let b = Basis::euclidean(2);
        let v = CoeffVector::new(b, vec![c(0.0, -3.0), c(1.0, 0.0)]).unwrap();
        let w = v.with_canonical_phase();
        assert!((w.coeffs()[0] - c(3.0, 0.0)).norm() < 1e-15);
        assert!((w.norm() - v.norm()).abs() < 1e-15);
    }

    #[test]
    fn power_decay_profile() {
        let v = VectorSpec::PowerDecay {
            exponent: 2.0,
            scale: 1.0,
        }
        .sample(&Basis::fourier(3))
        .unwrap();
        assert_eq!(v.fourier_coeff(0), c(1.0, 0.0));
        assert_eq!(v.fourier_coeff(-3), c(1.0 / 16.0, 0.0));
        assert!(VectorSpec::PowerDecay {
            exponent: 2.0,
            scale: 1.0
        }
        .sample(&Basis::grid(3))
        .is_err());
    }
}
