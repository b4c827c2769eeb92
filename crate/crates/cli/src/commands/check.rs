use std::io::Write;

use clap::{Args, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use wda::diagnostics::{
    check_beta_bound, check_bounded_iterates, check_lambda_identity, check_prelim_inequality,
    check_saddle, MonitorReport, Tolerances,
};
use wda::vector::{dot, sub};
use wda::{solver, ConvexExpr, Problem};

use super::{load_zoo, pool, select_zoo};
use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Monitor {
    Beta,
    Prelim,
    Bounded,
    Saddle,
    Lambda,
    /// Subgradient inequality on seeded random point pairs.
    Subgradient,
}

#[derive(Args, Debug)]
pub struct CheckArgs {
    /// Iterations per zoo trace.
    #[arg(long, default_value_t = 10_000)]
    pub iters: usize,
    /// Largest k for the β bound.
    #[arg(long, default_value_t = 100_000)]
    pub beta_k: usize,
    /// Run only these monitors.
    #[arg(long, value_enum, value_delimiter = ',')]
    pub only: Vec<Monitor>,
    /// Zoo problems to trace (default: all).
    #[arg(long)]
    pub zoo: Vec<String>,
    /// Seed for the random subgradient pairs.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Random pairs per expression.
    #[arg(long, default_value_t = 100)]
    pub pairs: usize,
    /// Demand an unreachable margin from every monitor, so the run must fail.
    #[arg(long)]
    pub inject_failure: bool,
}

#[derive(Debug, Serialize)]
pub struct CheckEntry {
    /// Zoo problem, absent for problem-independent monitors.
    pub problem: Option<String>,
    #[serde(flatten)]
    pub report: MonitorReport,
}

#[derive(Debug, Serialize)]
pub struct CheckReport {
    pub passed: bool,
    pub injected_failure: bool,
    pub results: Vec<CheckEntry>,
}

/// Margin every tolerance-based monitor must clear under `--inject-failure`.
const INJECTED_MARGIN: f64 = 1e6;

fn tolerances(inject: bool) -> Tolerances {
    let t = Tolerances::default();
    if !inject {
        return t;
    }
    Tolerances {
        beta: -INJECTED_MARGIN,
        prelim_per_iteration: -INJECTED_MARGIN,
        bounded_iterates: -INJECTED_MARGIN,
        saddle: -INJECTED_MARGIN,
        ..t
    }
}

fn wants(only: &[Monitor], m: Monitor) -> bool {
    only.is_empty() || only.contains(&m)
}

fn trace_monitors(name: &str, args: &CheckArgs, tol: &Tolerances) -> CliResult<Vec<MonitorReport>> {
    let (p, cert) = load_zoo(name)?;
    let mut out = Vec::new();
    let needs_trace = [
        Monitor::Prelim,
        Monitor::Bounded,
        Monitor::Saddle,
        Monitor::Lambda,
    ]
    .iter()
    .any(|m| wants(&args.only, *m));
    if needs_trace {
        let report =
            solver::run(&p, &vec![0.0; p.dim()], 0.0, args.iters).map_err(CliError::runtime)?;
        if wants(&args.only, Monitor::Prelim) {
            out.push(
                check_prelim_inequality(&report, tol.prelim_per_iteration)
                    .map_err(CliError::runtime)?,
            );
        }
        if wants(&args.only, Monitor::Bounded) {
            out.push(check_bounded_iterates(&report, &cert, tol.bounded_iterates).report);
        }
        if wants(&args.only, Monitor::Saddle) {
            out.push(check_saddle(&p, &report, &cert, tol.saddle).map_err(CliError::runtime)?);
        }
        if wants(&args.only, Monitor::Lambda) {
            out.push(
                check_lambda_identity(&report, tol.lambda_identity).map_err(CliError::runtime)?,
            );
        }
    }
    if wants(&args.only, Monitor::Subgradient) {
        let tol = if args.inject_failure {
            -INJECTED_MARGIN
        } else {
            1e-9
        };
        out.push(subgradient_pairs(&p, args.seed, args.pairs, tol)?);
    }
    Ok(out)
}

/// `e(y) ≥ e(x) + ⟨g(x), y − x⟩` for the objective, the inequalities and `|h_j|`,
/// on points drawn uniformly from `[-3, 3]^d`.
fn subgradient_pairs(p: &Problem, seed: u64, pairs: usize, tol: f64) -> CliResult<MonitorReport> {
    let mut exprs: Vec<ConvexExpr> = vec![p.objective().clone()];
    exprs.extend(p.inequalities().iter().cloned());
    exprs.extend(p.equalities().iter().map(|h| ConvexExpr::Abs(h.clone())));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = f64::INFINITY;
    let mut location = None;
    let mut first_violation = None;
    let mut at = 0;
    for e in &exprs {
        for _ in 0..pairs {
            let x: Vec<f64> = (0..p.dim()).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let y: Vec<f64> = (0..p.dim()).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let g = e.subgradient(&x).map_err(CliError::runtime)?;
            let lhs = e.eval(&y).map_err(CliError::runtime)?;
            let rhs = e.eval(&x).map_err(CliError::runtime)? + dot(&g, &sub(&y, &x));
            let margin = lhs - rhs;
            if margin < worst {
                worst = margin;
                location = Some(at);
            }
            if margin < -tol && first_violation.is_none() {
                first_violation = Some(at);
            }
            at += 1;
        }
    }
    Ok(MonitorReport {
        monitor: "subgradient_inequality".into(),
        passed: first_violation.is_none(),
        worst_margin: worst,
        location,
        first_violation,
        note: Some(format!("{at} random pairs, seed {seed}")),
    })
}

pub fn check(args: &CheckArgs) -> CliResult<CheckReport> {
    let tol = tolerances(args.inject_failure);
    let mut results = Vec::new();
    if wants(&args.only, Monitor::Beta) {
        results.push(CheckEntry {
            problem: None,
            report: check_beta_bound(args.beta_k, tol.beta),
        });
    }
    let per_problem = args.only.is_empty() || args.only.iter().any(|m| *m != Monitor::Beta);
    if per_problem {
        let names = select_zoo(&args.zoo, None)?;
        let runs: Vec<CliResult<Vec<MonitorReport>>> = pool()?.install(|| {
            names
                .par_iter()
                .map(|n| trace_monitors(n, args, &tol))
                .collect()
        });
        for (name, r) in names.iter().zip(runs) {
            for report in r? {
                results.push(CheckEntry {
                    problem: Some(name.to_string()),
                    report,
                });
            }
        }
    }
    Ok(CheckReport {
        passed: results.iter().all(|r| r.report.passed),
        injected_failure: args.inject_failure,
        results,
    })
}

pub fn run(args: CheckArgs, out: &mut dyn Write, err: &mut dyn Write) -> CliResult<u8> {
    let report = check(&args)?;
    crate::output::emit(
        out,
        &serde_json::to_string_pretty(&report).map_err(CliError::runtime)?,
    )?;
    for r in report.results.iter().filter(|r| !r.report.passed) {
        let _ = writeln!(
            err,
            "FAIL {} {}: worst margin {:e} at k={:?}",
            r.problem.as_deref().unwrap_or("-"),
            r.report.monitor,
            r.report.worst_margin,
            r.report.location
        );
    }
    Ok(if report.passed { 0 } else { 3 })
}
