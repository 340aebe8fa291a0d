//! JSON problem files, the solve pipeline, and JSON reports.

mod expr;
mod problem;
mod report;

pub use expr::Expr;
pub use problem::{
    parse_problem, parse_problem_with_budget, FiniteRankSpec, FnSpec, MatrixBasis, OperatorSpec,
    ProblemSpec, RhsSpec, Scalar, SymbolSpec, TermSpec, DEFAULT_FOURIER_INDEX, DEFAULT_GRID_NODES,
    DEFAULT_TOL,
};
pub use report::{
    outcome_exit_code, run, run_probe, run_psido, run_split, run_suites, run_with_budget, Echo,
    ErrorInfo, ProbeReport, PsidoReport, Report, Residuals, SplitCertificate, SplitReport,
    SuiteReport, BOOTSTRAP_STEPS, ECHO_LIMIT,
};

use crate::approximation::Budget;

/// Environment variable overriding the rank budget.
pub const MAX_RANK_ENV: &str = "FREDHOLM_MAX_RANK";

/// Default budget, with the rank ceiling taken from `FREDHOLM_MAX_RANK` when
/// it holds a positive integer.
pub fn budget_from_env() -> Budget {
    let mut budget = Budget::default();
    if let Some(r) = std::env::var(MAX_RANK_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&r| r > 0)
    {
        budget.max_rank = r;
    }
    budget
}
