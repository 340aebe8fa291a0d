mod common;

use std::collections::BTreeMap;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::*;
use fredholm::approximation::{bap_convergence_probe, certified_tail_slope};
use fredholm::finite_dim_lab::{
    dense_oracle_solve, run_corollary_suite, run_lemma_suite_with, LemmaFamily, OracleResult,
};
use fredholm::neumann::{apply_inverse_detailed, terms_needed};
use fredholm::operator_core::{
    Basis, CoeffVector, CompactOperator, DiagonalMultiplier, FiniteMatrix, KernelTerm, RealFn,
    SeparableKernel, Symbol, VectorSpec, C64,
};
use fredholm::psido_circle::{bootstrap_check, decay_exponent, solve_smooth, CircleOperator};
use fredholm::solver::{certify, solve, Branch, Outcome};
use fredholm::FredholmError;
use nalgebra::DMatrix;
use rand::Rng;

const TOL: f64 = 1e-8;
const THETA: f64 = 0.5;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

/// A solution-branch problem kept for the scale check.
struct Fixture {
    name: String,
    t: CompactOperator,
    y: CoeffVector,
}

fn secs(d: Duration) -> f64 {
    d.as_secs_f64()
}

fn lemma_suite() -> Verdict {
    let start = Instant::now();
    let ints = run_lemma_suite_with(
        1000,
        11,
        &[
            LemmaFamily::SmallIntegers,
            LemmaFamily::LowRankInteger,
            LemmaFamily::PlantedInteger,
        ],
    );
    let floats = run_lemma_suite_with(
        1000,
        12,
        &[LemmaFamily::Continuous, LemmaFamily::OrthogonalSpectrum],
    );
    let elapsed = start.elapsed();
    let pass = ints.violations == 0
        && floats.violations == 0
        && ints.exact_cases == 1000
        && elapsed < Duration::from_secs(10);
    verdict(
        pass,
        format!(
            "integer {}/{} exact, {} violations; continuous {} violations; {:.2}s",
            ints.exact_cases,
            ints.cases,
            ints.violations,
            floats.violations,
            secs(elapsed)
        ),
    )
}

fn corollary_suite() -> Verdict {
    let start = Instant::now();
    let s = run_corollary_suite(500, 21);
    let elapsed = start.elapsed();
    verdict(
        s.violations == 0 && elapsed < Duration::from_secs(10),
        format!(
            "{} cases, {} invertible, {} violations; {:.2}s",
            s.cases,
            s.invertible,
            s.violations,
            secs(elapsed)
        ),
    )
}

fn closed_form(fixtures: &mut Vec<Fixture>) -> Verdict {
    let start = Instant::now();
    let basis = Basis::grid(64);
    let t = st_kernel(&basis, 1.0);
    let y = s_on(&basis, 1.0);
    let out = match solve(&t, &y, THETA, TOL) {
        Ok(o) => o,
        Err(e) => return verdict(false, format!("solve failed: {e}")),
    };
    let Branch::Solution { x, .. } = &out.branch else {
        return verdict(false, "expected the solution branch");
    };
    let nodes = basis.nodes().unwrap();
    let max_err = x
        .coeffs()
        .iter()
        .zip(nodes)
        .map(|(v, s)| (v - C64::new(1.5 * s, 0.0)).norm())
        .fold(0.0, f64::max);
    let cert = certify(&t, &out, Some(&VectorSpec::Poly(vec![0.0, 1.0])));
    let elapsed = start.elapsed();
    let doubled = cert.doubled_resolution.unwrap_or(f64::INFINITY);
    fixtures.push(Fixture {
        name: "s·t".into(),
        t,
        y,
    });
    verdict(
        max_err <= 1e-8 && doubled <= 1e-7 && elapsed < Duration::from_secs(1),
        format!(
            "max node error {max_err:.2e}, doubled residual {doubled:.2e} at n = {:?}; {:.3}s",
            cert.doubled_resolution_size,
            secs(elapsed)
        ),
    )
}

fn fixed_vector() -> Verdict {
    let basis = Basis::grid(64);
    let t = st_kernel(&basis, 3.0);
    let y = s_on(&basis, 1.0);
    let out = match solve(&t, &y, THETA, TOL) {
        Ok(o) => o,
        Err(e) => return verdict(false, format!("solve failed: {e}")),
    };
    let Branch::FixedVector { y_star, .. } = &out.branch else {
        return verdict(false, "expected the fixed-vector branch");
    };
    let s = s_on(&basis, 1.0).normalized().unwrap();
    // Weighted inner product assembled here from the quadrature weights.
    let dot: C64 = y_star
        .coeffs()
        .iter()
        .zip(s.coeffs())
        .zip(basis.weights())
        .map(|((a, b), w)| a.conj() * b * w)
        .sum();
    let cosine = dot.norm();
    let residual = t.apply(y_star).unwrap().sub(y_star).unwrap().norm();
    verdict(
        cosine >= 1.0 - 1e-6 && residual <= 1e-8,
        format!("|cos| = {cosine:.12}, residual {residual:.2e}"),
    )
}

/// `(a_i, b_i, c_i)` of `Σ c_i a_i(s) b_i(t)`.
type Terms = Vec<(Vec<f64>, Vec<f64>, f64)>;

/// Random `Σ c_i a_i(s) b_i(t)` with cubic `a_i`, `b_i` and `c_i ∈ [−2, 2]`.
/// With `plant`, the `c_i` are rescaled so that the Galerkin matrix
/// `G_ij = c_i ∫ b_i a_j` has eigenvalue 1, resampling until the rescaled
/// coefficients stay in range.
fn random_problem(rng: &mut impl Rng, plant: bool) -> (Terms, bool) {
    loop {
        let r = rng.random_range(1..=4);
        let mut terms: Terms = (0..r)
            .map(|_| {
                (
                    random_poly(rng, 3),
                    random_poly(rng, 3),
                    rng.random_range(-2.0..2.0),
                )
            })
            .collect();
        if !plant {
            return (terms, false);
        }
        let g = faer::Mat::<f64>::from_fn(r, r, |i, j| {
            terms[i].2 * poly_inner(&terms[i].1, &terms[j].0)
        });
        let Ok(eigs) = g.eigenvalues() else { continue };
        let Some(mu) = eigs
            .iter()
            .filter(|z| z.im.abs() < 1e-12 * (1.0 + z.re.abs()) && z.re.abs() > 0.5)
            .map(|z| z.re)
            .find(|mu| terms.iter().all(|t| (t.2 / mu).abs() <= 2.0))
        else {
            continue;
        };
        for t in &mut terms {
            t.2 /= mu;
        }
        return (terms, true);
    }
}

fn kernel(terms: &Terms, basis: &Basis) -> CompactOperator {
    let terms = terms
        .iter()
        .map(|(a, b, c)| {
            KernelTerm::new(RealFn::Poly(a.clone()), RealFn::Poly(b.clone())).with_coeff(*c)
        })
        .collect();
    SeparableKernel::new(terms, basis).unwrap().into()
}

fn oracle_equivalence(fixtures: &mut Vec<Fixture>) -> Verdict {
    let mut rng = rng(51);
    let basis = Basis::grid(64);
    let (mut agree, mut gray, mut mismatch, mut planted, mut solutions) = (0, 0, 0, 0, 0);
    let mut worst_rel: f64 = 0.0;
    let mut first_problem = None;
    for case in 0..100 {
        let (terms, is_planted) = random_problem(&mut rng, case % 2 == 1);
        planted += is_planted as usize;
        let t = kernel(&terms, &basis);
        let rhs = RealFn::Poly(random_poly(&mut rng, 3));
        let y = CoeffVector::from_fn(basis.clone(), |s| C64::new(rhs.eval(s), 0.0)).unwrap();
        let oracle = dense_oracle_solve(&t, &y).unwrap();
        match (solve(&t, &y, THETA, TOL), oracle) {
            (Err(FredholmError::AmbiguousSingularity { .. }), _) => gray += 1,
            (
                Ok(Outcome {
                    branch: Branch::Solution { x, .. },
                    ..
                }),
                OracleResult::Solution(xo),
            ) => {
                let rel = x.sub(&xo).unwrap().norm() / xo.norm().max(f64::MIN_POSITIVE);
                worst_rel = worst_rel.max(rel);
                agree += 1;
                solutions += 1;
                if fixtures
                    .iter()
                    .filter(|f| f.name.starts_with("separable"))
                    .count()
                    < 5
                {
                    fixtures.push(Fixture {
                        name: format!("separable #{case}"),
                        t,
                        y,
                    });
                }
            }
            (
                Ok(Outcome {
                    branch: Branch::FixedVector { .. },
                    ..
                }),
                OracleResult::Singular(_),
            ) => agree += 1,
            (got, want) => {
                mismatch += 1;
                first_problem.get_or_insert(format!(
                    "case {case}: solver {:?}, oracle singular = {}",
                    got.map(|o| o.is_solution()),
                    matches!(want, OracleResult::Singular(_))
                ));
            }
        }
    }
    let gray_rate = gray as f64 / 100.0;
    let mut detail = format!(
        "{agree} agree ({solutions} solutions, {} fixed vectors, {planted} planted), \
         {mismatch} mismatches, gray-zone rate {:.0}%, worst relative error {worst_rel:.2e}",
        agree - solutions,
        gray_rate * 100.0
    );
    if let Some(p) = first_problem {
        detail.push_str(&format!("; {p}"));
    }
    verdict(
        mismatch == 0 && worst_rel <= 1e-6 && gray_rate < 0.05,
        detail,
    )
}

fn neumann_certificate() -> Verdict {
    let mut rng = rng(61);
    let n = 16;
    let eps = 1e-6;
    let mut worst_ratio: f64 = 0.0;
    let mut pass = true;
    for kappa in [0.25, 0.5, 0.9] {
        let j = terms_needed(kappa, eps).unwrap();
        let mut d: Vec<f64> = (0..n).map(|_| rng.random_range(-kappa..=kappa)).collect();
        d[0] = kappa;
        let k: CompactOperator = FiniteMatrix::from_real(DMatrix::from_diagonal(
            &nalgebra::DVector::from_vec(d.clone()),
        ))
        .unwrap()
        .into();
        for _ in 0..20 {
            let y = random_vector(&mut rng, &Basis::euclidean(n));
            let z = apply_inverse_detailed(&k, kappa, &y, eps).unwrap().z;
            let residual = z
                .coeffs()
                .iter()
                .zip(&d)
                .zip(y.coeffs())
                .map(|((zi, di), yi)| (zi * (1.0 - di) - yi).norm_sqr())
                .sum::<f64>()
                .sqrt();
            let bound = kappa.powi(j as i32 + 1) * y.norm() / (1.0 - kappa);
            worst_ratio = worst_ratio.max(residual / bound);
            pass &= residual <= bound * (1.0 + 1e-10);
        }
    }
    verdict(pass, format!("worst residual / bound = {worst_ratio:.3}"))
}

fn bap_convergence() -> Verdict {
    let t: CompactOperator = DiagonalMultiplier::new(Symbol::Power {
        scale: 1.0,
        exponent: -2.0,
    })
    .unwrap()
    .into();
    let rows = bap_convergence_probe(&t, &[8, 16, 32, 64], &Basis::fourier(256)).unwrap();
    let dominated = rows.iter().all(|r| r.measured_tail <= r.certified_tail);
    let exact = rows
        .iter()
        .all(|r| (r.certified_tail - (r.max_index as f64 + 2.0).powi(-2)).abs() <= 1e-15);
    // First discarded mode has 1 + |n| = N + 2.
    let (xs, ys): (Vec<f64>, Vec<f64>) = rows
        .iter()
        .map(|r| ((r.max_index as f64 + 2.0).ln(), r.certified_tail.ln()))
        .unzip();
    let mx = xs.iter().sum::<f64>() / xs.len() as f64;
    let my = ys.iter().sum::<f64>() / ys.len() as f64;
    let slope = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (x - mx) * (y - my))
        .sum::<f64>()
        / xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
    let lib_slope = certified_tail_slope(&rows).unwrap_or(f64::NAN);
    let table = rows
        .iter()
        .map(|r| {
            format!(
                "N={} {:.3e}≤{:.3e}",
                r.max_index, r.measured_tail, r.certified_tail
            )
        })
        .collect::<Vec<_>>()
        .join(", ");
    verdict(
        dominated && exact && (-2.1..=-1.9).contains(&slope) && (slope - lib_slope).abs() < 1e-12,
        format!("{table}; slope {slope:.4}"),
    )
}

fn psido_regularity(fixtures: &mut Vec<Fixture>) -> Verdict {
    let mult = DiagonalMultiplier::new(Symbol::InverseQuadratic {
        shift: 2.0,
        scale: 1.0,
    })
    .unwrap();
    let p = CircleOperator::new(mult).unwrap();
    let basis = Basis::fourier(64);
    let rhs = VectorSpec::PowerDecay {
        exponent: 8.0,
        scale: 1.0,
    }
    .sample(&basis)
    .unwrap();
    let out = match solve_smooth(&p, &rhs, THETA, TOL) {
        Ok(o) => o,
        Err(e) => return verdict(false, format!("solve failed: {e}")),
    };
    let Branch::Solution { x, .. } = &out.outcome.branch else {
        return verdict(false, "expected the solution branch");
    };
    let fit = decay_exponent(x).unwrap();
    let boot = bootstrap_check(&p, &rhs, x, 4);
    let worst = boot
        .as_ref()
        .map(|steps| steps.iter().map(|s| s.lhs / s.bound).fold(0.0, f64::max))
        .unwrap_or(f64::INFINITY);
    fixtures.push(Fixture {
        name: "circle".into(),
        t: p.to_operator().unwrap(),
        y: rhs,
    });
    verdict(
        (fit.slope + 8.0).abs() <= 0.5 && boot.is_ok() && worst <= 1.1,
        format!(
            "decay slope {:.3}, bootstrap {} steps, worst lhs/bound {worst:.3}",
            fit.slope,
            boot.map(|s| s.len()).unwrap_or(0)
        ),
    )
}

fn scale_invariance(fixtures: &[Fixture]) -> Verdict {
    let mut pass = !fixtures.is_empty();
    let mut worst: f64 = 0.0;
    let mut note = String::new();
    for f in fixtures {
        let base = solve(&f.t, &f.y, THETA, TOL).unwrap();
        for c in [-1.0, 2.0, 10.0] {
            let c = C64::new(c, 0.0);
            match solve(&f.t, &f.y.scaled(c), THETA, TOL) {
                Ok(o) if o.is_solution() == base.is_solution() => {
                    let want = base.vector().scaled(c);
                    let err = o.vector().sub(&want).unwrap().norm() / want.norm();
                    worst = worst.max(err);
                    if err > TOL {
                        pass = false;
                        note = format!("; {} at c = {}", f.name, c.re);
                    }
                }
                _ => {
                    pass = false;
                    note = format!("; branch changed for {} at c = {}", f.name, c.re);
                }
            }
        }
    }
    // The fixed-vector fixture must stay on its branch as well.
    let basis = Basis::grid(64);
    let t3 = st_kernel(&basis, 3.0);
    for c in [-1.0, 2.0, 10.0] {
        let out = solve(&t3, &s_on(&basis, c), THETA, TOL);
        if !matches!(out, Ok(ref o) if !o.is_solution()) {
            pass = false;
            note = format!("; 3st left the fixed-vector branch at c = {c}");
        }
    }
    verdict(
        pass,
        format!(
            "{} fixtures, worst relative deviation {worst:.2e}{note}",
            fixtures.len()
        ),
    )
}

fn main() -> ExitCode {
    let mut fixtures = Vec::new();
    let mut results: BTreeMap<usize, (&str, Verdict)> = BTreeMap::new();
    results.insert(1, ("lemma suite", lemma_suite()));
    results.insert(2, ("corollary suite", corollary_suite()));
    results.insert(3, ("closed-form solve", closed_form(&mut fixtures)));
    results.insert(4, ("fixed-vector recovery", fixed_vector()));
    results.insert(5, ("oracle equivalence", oracle_equivalence(&mut fixtures)));
    results.insert(6, ("Neumann certificate", neumann_certificate()));
    results.insert(7, ("BAP convergence", bap_convergence()));
    results.insert(8, ("circle regularity", psido_regularity(&mut fixtures)));
    results.insert(9, ("scale invariance", scale_invariance(&fixtures)));
    let mut failed = 0;
    for (k, (name, v)) in &results {
        let tag = if v.pass { "PASS" } else { "FAIL" };
        failed += !v.pass as usize;
        println!("[{tag}] {k}. {name}: {}", v.detail);
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
