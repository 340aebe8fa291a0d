use std::time::Instant;

use serde::Serialize;

use super::problem::ProblemSpec;
use crate::approximation::{
    bap_convergence_probe, certified_tail_slope, split_with_budget, Budget, ProbeRow, SplitMethod,
};
use crate::error::{FredholmError, Result};
use crate::finite_dim_lab::{run_corollary_suite, run_lemma_suite, SuiteSummary};
use crate::operator_core::CoeffVector;
use crate::psido_circle::{
    bootstrap_check, decay_exponent, BootstrapStep, DecayFit, SobolevReading,
};
use crate::solver::{certify, solve_with_budget, Branch, Diagnostics, Outcome};

/// Largest number of coefficients echoed into a report.
pub const ECHO_LIMIT: usize = 1024;
/// Bootstrap steps run by the `psido` pipeline.
pub const BOOTSTRAP_STEPS: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorInfo {
    pub name: String,
    pub message: String,
}

impl From<&FredholmError> for ErrorInfo {
    fn from(e: &FredholmError) -> Self {
        Self {
            name: e.name().to_string(),
            message: e.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Residuals {
    /// `‖(I − T) x − y‖` or `‖T y* − y*‖` as certified by the solver.
    pub reported: f64,
    pub same_resolution: Option<f64>,
    pub doubled_resolution: Option<f64>,
    pub doubled_resolution_size: Option<usize>,
}

/// Coefficients of the returned vector, `[re, im]` per entry.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Echo {
    pub basis: String,
    pub resolution: usize,
    pub values: Vec<[f64; 2]>,
    pub truncated: bool,
}

impl Echo {
    pub fn of(v: &CoeffVector) -> Self {
        Self {
            basis: v.basis().kind().to_string(),
            resolution: v.basis().resolution(),
            values: v
                .coeffs()
                .iter()
                .take(ECHO_LIMIT)
                .map(|c| [c.re, c.im])
                .collect(),
            truncated: v.len() > ECHO_LIMIT,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    /// `"solution"`, `"fixed_vector"` or `"error"`.
    pub outcome: String,
    pub error: Option<ErrorInfo>,
    pub residuals: Option<Residuals>,
    pub diagnostics: Option<Diagnostics>,
    pub coefficients: Option<Echo>,
    pub timing_ms: f64,
}

impl Report {
    fn error(e: &FredholmError, started: Instant) -> Self {
        Self {
            outcome: "error".into(),
            error: Some(e.into()),
            residuals: None,
            diagnostics: None,
            coefficients: None,
            timing_ms: elapsed_ms(started),
        }
    }

    pub fn exit_code(&self) -> i32 {
        outcome_exit_code(&self.outcome)
    }
}

/// 0 for a solution, 2 for a fixed vector, 1 for an error.
pub fn outcome_exit_code(outcome: &str) -> i32 {
    match outcome {
        "solution" => 0,
        "fixed_vector" => 2,
        "error" | "fail" => 1,
        _ => 0,
    }
}

fn elapsed_ms(started: Instant) -> f64 {
    started.elapsed().as_secs_f64() * 1e3
}

fn outcome_kind(o: &Outcome) -> &'static str {
    match o.branch {
        Branch::Solution { .. } => "solution",
        Branch::FixedVector { .. } => "fixed_vector",
    }
}

struct Solved {
    outcome: Outcome,
    residuals: Residuals,
}

fn solve_spec(spec: &ProblemSpec, budget: Budget) -> Result<Solved> {
    let basis = spec.working_basis()?;
    let t = spec.build_operator(&basis)?;
    let rhs = spec.rhs_spec(&basis)?;
    let y = rhs.sample(&basis)?;
    let outcome = solve_with_budget(&t, &y, spec.theta, spec.tol, budget)?;
    let cert = certify(&t, &outcome, Some(&rhs));
    let residuals = Residuals {
        reported: outcome.residual(),
        same_resolution: cert.same_resolution,
        doubled_resolution: cert.doubled_resolution,
        doubled_resolution_size: cert.doubled_resolution_size,
    };
    Ok(Solved { outcome, residuals })
}

/// The full pipeline: split, reduce, solve, certify.
pub fn run(spec: &ProblemSpec) -> Report {
    run_with_budget(spec, Budget::default())
}

pub fn run_with_budget(spec: &ProblemSpec, budget: Budget) -> Report {
    let started = Instant::now();
    match solve_spec(spec, budget) {
        Ok(Solved { outcome, residuals }) => Report {
            outcome: outcome_kind(&outcome).into(),
            error: None,
            residuals: Some(residuals),
            coefficients: Some(Echo::of(outcome.vector())),
            diagnostics: Some(outcome.diagnostics),
            timing_ms: elapsed_ms(started),
        },
        Err(e) => Report::error(&e, started),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SplitCertificate {
    pub method: SplitMethod,
    pub theta: f64,
    pub kappa: f64,
    pub rank: usize,
    pub finite_hs_norm: f64,
    pub basis: String,
    pub resolution: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SplitReport {
    /// `"split"` or `"error"`.
    pub outcome: String,
    pub error: Option<ErrorInfo>,
    pub splitting: Option<SplitCertificate>,
    pub timing_ms: f64,
}

impl SplitReport {
    pub fn exit_code(&self) -> i32 {
        outcome_exit_code(&self.outcome)
    }
}

/// Splitting certificate only.
pub fn run_split(spec: &ProblemSpec, budget: Budget) -> SplitReport {
    let started = Instant::now();
    let result = (|| -> Result<SplitCertificate> {
        let basis = spec.working_basis()?;
        let t = spec.build_operator(&basis)?;
        let sp = split_with_budget(&t, spec.theta, &basis, budget)?;
        Ok(SplitCertificate {
            method: sp.method().clone(),
            theta: sp.theta(),
            kappa: sp.kappa(),
            rank: sp.finite().rank(),
            finite_hs_norm: sp.finite().hilbert_schmidt_norm(),
            basis: basis.kind().into(),
            resolution: basis.resolution(),
        })
    })();
    match result {
        Ok(c) => SplitReport {
            outcome: "split".into(),
            error: None,
            splitting: Some(c),
            timing_ms: elapsed_ms(started),
        },
        Err(e) => SplitReport {
            outcome: "error".into(),
            error: Some((&e).into()),
            splitting: None,
            timing_ms: elapsed_ms(started),
        },
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeReport {
    /// `"probe"` or `"error"`.
    pub outcome: String,
    pub error: Option<ErrorInfo>,
    pub rows: Vec<ProbeRow>,
    /// Log–log slope of the certified tail against `N + 2`.
    pub certified_slope: Option<f64>,
    pub timing_ms: f64,
}

impl ProbeReport {
    pub fn exit_code(&self) -> i32 {
        outcome_exit_code(&self.outcome)
    }
}

/// Measured against certified projection tails.
pub fn run_probe(spec: &ProblemSpec, max_indices: &[usize]) -> ProbeReport {
    let started = Instant::now();
    let result = (|| -> Result<Vec<ProbeRow>> {
        let basis = spec.working_basis()?;
        let t = spec.build_operator(&basis)?;
        bap_convergence_probe(&t, max_indices, &basis)
    })();
    match result {
        Ok(rows) => ProbeReport {
            outcome: "probe".into(),
            error: None,
            certified_slope: certified_tail_slope(&rows),
            rows,
            timing_ms: elapsed_ms(started),
        },
        Err(e) => ProbeReport {
            outcome: "error".into(),
            error: Some((&e).into()),
            rows: Vec::new(),
            certified_slope: None,
            timing_ms: elapsed_ms(started),
        },
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PsidoReport {
    pub outcome: String,
    pub error: Option<ErrorInfo>,
    pub residuals: Option<Residuals>,
    pub diagnostics: Option<Diagnostics>,
    pub sobolev: Vec<SobolevReading>,
    pub bootstrap: Vec<BootstrapStep>,
    pub decay: Option<DecayFit>,
    pub coefficients: Option<Echo>,
    pub timing_ms: f64,
}

impl PsidoReport {
    pub fn exit_code(&self) -> i32 {
        outcome_exit_code(&self.outcome)
    }
}

/// Solve on the circle, then Sobolev readings, bootstrap chain and decay fit.
pub fn run_psido(spec: &ProblemSpec, budget: Budget) -> PsidoReport {
    let started = Instant::now();
    let result = (|| -> Result<PsidoReport> {
        let basis = spec.working_basis()?;
        let p = spec.operator.circle(&basis)?;
        let t = p.to_operator()?;
        let rhs = spec.rhs_spec(&basis)?;
        let y = rhs.sample(&basis)?;
        let outcome = solve_with_budget(&t, &y, spec.theta, spec.tol, budget)?;
        let cert = certify(&t, &outcome, Some(&rhs));
        let (sobolev, bootstrap, decay) = match &outcome.branch {
            Branch::Solution { x, .. } => (
                crate::psido_circle::RECORDED_S
                    .iter()
                    .map(|&s| crate::psido_circle::sobolev_norm(x, s))
                    .collect::<Result<Vec<_>>>()?,
                bootstrap_check(&p, &y, x, BOOTSTRAP_STEPS)?,
                decay_exponent(x).ok(),
            ),
            Branch::FixedVector { .. } => (Vec::new(), Vec::new(), None),
        };
        Ok(PsidoReport {
            outcome: outcome_kind(&outcome).into(),
            error: None,
            residuals: Some(Residuals {
                reported: outcome.residual(),
                same_resolution: cert.same_resolution,
                doubled_resolution: cert.doubled_resolution,
                doubled_resolution_size: cert.doubled_resolution_size,
            }),
            coefficients: Some(Echo::of(outcome.vector())),
            diagnostics: Some(outcome.diagnostics),
            sobolev,
            bootstrap,
            decay,
            timing_ms: 0.0,
        })
    })();
    match result {
        Ok(mut r) => {
            r.timing_ms = elapsed_ms(started);
            r
        }
        Err(e) => PsidoReport {
            outcome: "error".into(),
            error: Some((&e).into()),
            residuals: None,
            diagnostics: None,
            sobolev: Vec::new(),
            bootstrap: Vec::new(),
            decay: None,
            coefficients: None,
            timing_ms: elapsed_ms(started),
        },
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    /// `"pass"` or `"fail"`.
    pub outcome: String,
    pub lemma: SuiteSummary,
    pub corollary: SuiteSummary,
    pub timing_ms: f64,
}

impl SuiteReport {
    pub fn exit_code(&self) -> i32 {
        outcome_exit_code(&self.outcome)
    }
}

/// Random rank checks of both equivalences; corollary pairs number half the
/// lemma cases.
pub fn run_suites(cases: usize, seed: u64) -> SuiteReport {
    let started = Instant::now();
    let lemma = run_lemma_suite(cases, seed);
    let corollary = run_corollary_suite(cases.div_ceil(2), seed);
    let pass = lemma.violations == 0 && corollary.violations == 0;
    SuiteReport {
        outcome: if pass { "pass" } else { "fail" }.into(),
        lemma,
        corollary,
        timing_ms: elapsed_ms(started),
    }
}
