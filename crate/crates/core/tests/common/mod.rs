#![allow(dead_code)]

use fredholm::operator_core::{
    Basis, CoeffVector, CompactOperator, DiagonalMultiplier, FiniteMatrix, FiniteRankOperator,
    KernelFn, KernelTerm, RealFn, SampledKernel, SeparableKernel, Symbol, C64,
};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

pub fn random_vector(rng: &mut impl Rng, basis: &Basis) -> CoeffVector {
    let coeffs = (0..basis.dim())
        .map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect();
    CoeffVector::new(basis.clone(), coeffs).unwrap()
}

pub fn random_unit(rng: &mut impl Rng, basis: &Basis) -> CoeffVector {
    loop {
        if let Some(u) = random_vector(rng, basis).normalized() {
            return u;
        }
    }
}

/// `c · s · t` on the grid.
pub fn st_kernel(basis: &Basis, coeff: f64) -> CompactOperator {
    SeparableKernel::new(
        vec![
            KernelTerm::new(RealFn::Poly(vec![0.0, 1.0]), RealFn::Poly(vec![0.0, 1.0]))
                .with_coeff(coeff),
        ],
        basis,
    )
    .unwrap()
    .into()
}

pub fn s_on(basis: &Basis, scale: f64) -> CoeffVector {
    CoeffVector::from_fn(basis.clone(), |s| c(scale * s)).unwrap()
}

pub fn random_poly(rng: &mut impl Rng, degree: usize) -> Vec<f64> {
    (0..=degree).map(|_| rng.random_range(-2.0..2.0)).collect()
}

pub fn random_separable(rng: &mut impl Rng, basis: &Basis, rank: usize) -> CompactOperator {
    let terms = (0..rank)
        .map(|_| {
            KernelTerm::new(
                RealFn::Poly(random_poly(rng, 3)),
                RealFn::Poly(random_poly(rng, 3)),
            )
            .with_coeff(rng.random_range(-2.0..2.0))
        })
        .collect();
    SeparableKernel::new(terms, basis).unwrap().into()
}

pub fn random_symbol(rng: &mut impl Rng) -> Symbol {
    match rng.random_range(0..4) {
        0 => Symbol::Power {
            scale: rng.random_range(-2.0..2.0),
            exponent: -rng.random_range(0.5..4.0),
        },
        1 => Symbol::Geometric {
            scale: rng.random_range(-2.0..2.0),
            ratio: rng.random_range(-0.95..0.95),
        },
        2 => Symbol::InverseQuadratic {
            shift: rng.random_range(0.2..5.0),
            scale: rng.random_range(-3.0..3.0),
        },
        _ => Symbol::Table(
            (0..rng.random_range(1..6))
                .map(|_| {
                    (
                        rng.random_range(-8i64..=8),
                        C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
                    )
                })
                .collect(),
        ),
    }
}

/// One random operator of each presentation, selected by `kind`, together
/// with a basis it acts on.
pub fn random_operator(rng: &mut impl Rng, kind: usize) -> (CompactOperator, Basis) {
    match kind % 6 {
        0 => {
            let b = Basis::grid(rng.random_range(4..24));
            let r = rng.random_range(1..4);
            (random_separable(rng, &b, r), b)
        }
        1 => {
            let b = Basis::grid(rng.random_range(4..24));
            let a = rng.random_range(0.1..3.0);
            let scale = rng.random_range(-1.5..1.5);
            let k = KernelFn::new(format!("{scale}*exp(-{a}|s-t|)"), move |s, t| {
                scale * (-a * (s - t).abs()).exp()
            });
            (SampledKernel::new(k, &b).unwrap().into(), b)
        }
        2 => {
            let b = Basis::fourier(rng.random_range(2..40));
            (
                DiagonalMultiplier::new(random_symbol(rng)).unwrap().into(),
                b,
            )
        }
        3 => {
            let n = rng.random_range(1..9);
            let m = DMatrix::from_fn(n, n, |_, _| {
                C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
            });
            (FiniteMatrix::new(m).unwrap().into(), Basis::euclidean(n))
        }
        4 => {
            let b = Basis::fourier(rng.random_range(2..20));
            let r = rng.random_range(1..4);
            let left = (0..r).map(|_| random_vector(rng, &b)).collect();
            let right = (0..r).map(|_| random_vector(rng, &b)).collect();
            let g: CompactOperator = FiniteRankOperator::new(left, right).unwrap().into();
            let m: CompactOperator = DiagonalMultiplier::new(random_symbol(rng)).unwrap().into();
            let z = C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            (
                CompactOperator::sum(m, CompactOperator::scaled(z, g)).unwrap(),
                b,
            )
        }
        _ => {
            let b = Basis::grid(rng.random_range(4..16));
            let r = rng.random_range(1..3);
            let sep = random_separable(rng, &b, r);
            let scale = rng.random_range(-1.0..1.0);
            let k = KernelFn::new(format!("{scale}*sin(s+t)"), move |s, t| {
                scale * (s + t).sin()
            });
            let sampled: CompactOperator = SampledKernel::new(k, &b).unwrap().into();
            (CompactOperator::sum(sep, sampled).unwrap(), b)
        }
    }
}

/// Dense coordinate matrix of `T`, assembled column by column.
pub fn dense(t: &CompactOperator, basis: &Basis) -> DMatrix<C64> {
    let n = basis.dim();
    let mut m = DMatrix::zeros(n, n);
    for j in 0..n {
        let col = t.apply(&CoeffVector::unit(basis.clone(), j)).unwrap();
        for (i, v) in col.coeffs().iter().enumerate() {
            m[(i, j)] = *v;
        }
    }
    m
}

/// `∫₀¹ p q` for polynomials given by ascending coefficients.
pub fn poly_inner(p: &[f64], q: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (k, a) in p.iter().enumerate() {
        for (l, b) in q.iter().enumerate() {
            acc += a * b / (k + l + 1) as f64;
        }
    }
    acc
}
