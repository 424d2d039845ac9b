//! Command-line front end for the WOET toolkit.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::info;
use woet_core::io::{emit_csv, parse_problem_file, report_to_json, run, write_report, Mode, Problem};
use woet_core::{Status, WoetError};

#[derive(Parser)]
#[command(name = "woet", version, about = "Weak optimal entropy transport solver and certifier")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a WOET problem and certify it with a dual bound.
    Solve(Common),
    /// Evaluate supplied dual potentials, or run the dual ascent alone.
    Dual(Common),
    /// Check the feasibility conditions on masses and cost.
    CheckFeasibility(Common),
    /// Solve, then test the optimum for C-monotonicity.
    CheckMonotone(Common),
    /// Solve a martingale-constrained problem.
    Moet(Common),
    /// Compare the martingale value with its homogeneous formulations.
    HomogCheck(Common),
    /// Run the mode named in the problem file.
    Run(Common),
}

#[derive(Args)]
struct Common {
    /// Problem file (JSON, schema "woet/1").
    problem: PathBuf,
    /// Relative duality-gap tolerance.
    #[arg(long)]
    tol: Option<f64>,
    /// Newton iteration budget.
    #[arg(long)]
    max_iter: Option<usize>,
    /// Seed for randomized checks.
    #[arg(long)]
    seed: Option<u64>,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the coupling as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Do not print the report.
    #[arg(long)]
    quiet: bool,
}

const EXIT_INFEASIBLE: u8 = 2;
const EXIT_ITER_LIMIT: u8 = 3;
const EXIT_INPUT: u8 = 4;

fn apply_overrides(mut problem: Problem, c: &Common) -> Result<Problem, WoetError> {
    let mut options = problem.spec.options.clone();
    if let Some(t) = c.tol {
        options.tol_gap = t;
    }
    if let Some(m) = c.max_iter {
        options.max_iter = m;
    }
    if let Some(s) = c.seed {
        options.seed = s;
    }
    problem.spec = problem.spec.with_options(options.clone())?;
    if let Some(m) = problem.martingale.take() {
        problem.martingale = Some(m.with_options(options)?);
    }
    Ok(problem)
}

fn execute(command: Command) -> Result<Status, WoetError> {
    let (mode, common) = match command {
        Command::Solve(c) => (Some(Mode::Woet), c),
        Command::Dual(c) => (Some(Mode::DualOnly), c),
        Command::CheckFeasibility(c) => (Some(Mode::Feasibility), c),
        Command::CheckMonotone(c) => (Some(Mode::Monotone), c),
        Command::Moet(c) => (Some(Mode::Moet), c),
        Command::HomogCheck(c) => (Some(Mode::HomogeneousCheck), c),
        Command::Run(c) => (None, c),
    };
    let problem = apply_overrides(parse_problem_file(&common.problem)?, &common)?;
    let mode = mode.unwrap_or(problem.mode);
    info!("running {} on {}", mode.as_str(), common.problem.display());
    let report = run(&problem, mode)?;
    match &common.out {
        Some(path) => write_report(&report, path)?,
        None if !common.quiet => {
            let mut out = std::io::stdout().lock();
            let _ = writeln!(out, "{}", report_to_json(&report));
        }
        None => {}
    }
    if let Some(path) = &common.csv {
        emit_csv(&report, path)?;
    }
    Ok(report.status)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("WOET_LOG", "error")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let obj = serde_json::json!({ "error": "usage_error", "message": e.to_string() });
            eprintln!("{obj}");
            return ExitCode::from(EXIT_INPUT);
        }
    };
    match execute(cli.command) {
        Ok(Status::Optimal | Status::Feasible) => ExitCode::SUCCESS,
        Ok(Status::Infeasible) => ExitCode::from(EXIT_INFEASIBLE),
        Ok(Status::IterLimit) => ExitCode::from(EXIT_ITER_LIMIT),
        Err(e) => {
            let obj = serde_json::json!({ "error": e.kind(), "message": e.to_string() });
            eprintln!("{obj}");
            ExitCode::from(EXIT_INPUT)
        }
    }
}
