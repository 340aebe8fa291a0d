use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use fredholm::cli_io::{
    budget_from_env, parse_problem_with_budget, run_probe, run_psido, run_split, run_suites,
    run_with_budget, ErrorInfo, ProblemSpec,
};
use fredholm::FredholmError;

#[derive(Parser)]
#[command(
    name = "fredholm",
    version,
    about = "Certified solver for (I - T) x = y with compact T"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Overrides {
    /// Target bound on the remainder norm, in (0, 1).
    #[arg(long)]
    theta: Option<f64>,
    /// Relative residual tolerance.
    #[arg(long)]
    tol: Option<f64>,
    /// Grid nodes or Fourier max index.
    #[arg(long)]
    resolution: Option<usize>,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the problem file; exit 0 for a solution, 2 for a fixed vector.
    Solve {
        file: PathBuf,
        #[command(flatten)]
        opts: Overrides,
    },
    /// Emit the splitting certificate only.
    Split {
        file: PathBuf,
        #[command(flatten)]
        opts: Overrides,
    },
    /// Random rank checks of injective <=> surjective.
    LemmaSuite {
        #[arg(long, default_value_t = 1000)]
        cases: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Measured against certified Fourier-projection tails.
    BapProbe {
        file: PathBuf,
        /// Comma-separated projection indices.
        #[arg(long = "n", value_delimiter = ',', default_values_t = [8usize, 16, 32, 64])]
        n: Vec<usize>,
        #[command(flatten)]
        opts: Overrides,
    },
    /// Circle pipeline with Sobolev readings and the regularity bootstrap.
    Psido {
        file: PathBuf,
        #[command(flatten)]
        opts: Overrides,
    },
}

#[derive(Serialize)]
struct FailedInput {
    outcome: &'static str,
    error: ErrorInfo,
}

fn load(file: &Path, opts: &Overrides) -> Result<ProblemSpec, FredholmError> {
    let text = fs::read_to_string(file).map_err(|e| FredholmError::ParseError {
        field: String::new(),
        location: file.display().to_string(),
        message: e.to_string(),
    })?;
    let budget = budget_from_env();
    let mut spec = parse_problem_with_budget(&text, budget)?;
    if let Some(t) = opts.theta {
        spec.theta = t;
    }
    if let Some(t) = opts.tol {
        spec.tol = t;
    }
    if opts.resolution.is_some() {
        spec.resolution = opts.resolution;
    }
    spec.validate(budget)?;
    Ok(spec)
}

fn emit<T: Serialize>(report: &T, output: Option<&Path>) -> Result<(), String> {
    let mut text = serde_json::to_string_pretty(report).map_err(|e| e.to_string())?;
    text.push('\n');
    match output {
        Some(path) => fs::write(path, text).map_err(|e| format!("{}: {e}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn finish<T: Serialize>(report: &T, code: i32, output: Option<&Path>) -> ExitCode {
    match emit(report, output) {
        Ok(()) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("fredholm: {e}");
            ExitCode::from(1)
        }
    }
}

fn with_spec(
    file: &Path,
    opts: &Overrides,
    go: impl FnOnce(&ProblemSpec, Option<&Path>) -> ExitCode,
) -> ExitCode {
    let output = opts.output.as_deref();
    match load(file, opts) {
        Ok(spec) => go(&spec, output),
        Err(e) => finish(
            &FailedInput {
                outcome: "error",
                error: (&e).into(),
            },
            1,
            output,
        ),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let budget = budget_from_env();
    match &cli.command {
        Command::Solve { file, opts } => with_spec(file, opts, |spec, out| {
            let r = run_with_budget(spec, budget);
            finish(&r, r.exit_code(), out)
        }),
        Command::Split { file, opts } => with_spec(file, opts, |spec, out| {
            let r = run_split(spec, budget);
            finish(&r, r.exit_code(), out)
        }),
        Command::BapProbe { file, n, opts } => with_spec(file, opts, |spec, out| {
            let r = run_probe(spec, n);
            finish(&r, r.exit_code(), out)
        }),
        Command::Psido { file, opts } => with_spec(file, opts, |spec, out| {
            let r = run_psido(spec, budget);
            finish(&r, r.exit_code(), out)
        }),
        Command::LemmaSuite {
            cases,
            seed,
            output,
        } => {
            let r = run_suites(*cases, *seed);
            finish(&r, r.exit_code(), output.as_deref())
        }
    }
}
