use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use clap::Args;
use serde::Serialize;
use wda::diagnostics::{self, BoundReport};
use wda::solver::values_at;
use wda::zoo::Certificate;
use wda::{run_with, solver, Problem, RunOptions, RunReport};

use super::{load_file, load_zoo, Format};
use crate::error::{CliError, CliResult};
use crate::output::{self, JsonRow};

/// Iterations of the pilot run that estimates the subgradient bound in eps mode.
pub const PILOT_ITERATIONS: usize = 1000;

#[derive(Args, Debug, Clone, Serialize)]
#[group(id = "source", required = true, multiple = false)]
pub struct Source {
    /// Problem file in the JSON problem format.
    #[arg(long)]
    pub problem: Option<PathBuf>,
    /// Built-in problem name.
    #[arg(long)]
    pub zoo: Option<String>,
}

#[derive(Args, Debug, Serialize)]
pub struct SolveArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub source: Source,
    /// Number of iterations K.
    #[arg(long, conflicts_with_all = ["eps1", "eps2"], required_unless_present_all = ["eps1", "eps2"])]
    pub iters: Option<usize>,
    /// Target objective gap; picks K from the convergence bounds (zoo problems only).
    #[arg(long, requires = "eps2")]
    pub eps1: Option<f64>,
    /// Target constraint violation.
    #[arg(long, requires = "eps1")]
    pub eps2: Option<f64>,
    /// Starting point, comma separated (default 0).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub x0: Option<Vec<f64>>,
    /// Starting multiplier, must be nonnegative.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub lambda0: f64,
    /// Keep every n-th trace row plus the last.
    #[arg(long, default_value_t = 1)]
    pub trace_every: usize,
    /// Trace destination; `-` for standard output.
    #[arg(long)]
    pub out: Option<String>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Recorded in the JSON envelope; the solver itself is deterministic.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Serialize)]
struct Envelope<'a> {
    command: &'static str,
    config: &'a SolveArgs,
    iterations: usize,
    wall_time_s: f64,
    terminated_exactly: bool,
    x_bar: &'a [f64],
    f_x_bar: f64,
    fbar_x_bar: f64,
    iteration_choice: Option<&'a BoundReport>,
    rows: Vec<JsonRow>,
}

pub fn run(args: SolveArgs, out: &mut dyn Write, err: &mut dyn Write) -> CliResult<u8> {
    let (problem, cert) = match (&args.source.problem, &args.source.zoo) {
        (Some(path), _) => (load_file(path)?, None),
        (None, Some(name)) => {
            let (p, c) = load_zoo(name)?;
            (p, Some(c))
        }
        (None, None) => unreachable!("clap requires a source"),
    };
    let x0 = match &args.x0 {
        Some(v) if v.len() != problem.dim() => {
            return Err(CliError::Config(format!(
                "--x0 has {} entries, problem dimension is {}",
                v.len(),
                problem.dim()
            )))
        }
        Some(v) => v.clone(),
        None => vec![0.0; problem.dim()],
    };
    if args.lambda0.is_nan() || args.lambda0 < 0.0 {
        return Err(CliError::Config(format!(
            "--lambda0 must be nonnegative, got {}",
            args.lambda0
        )));
    }

    let started = Instant::now();
    let mut iteration_choice = None;
    let iterations = match (args.iters, args.eps1, args.eps2) {
        (Some(k), _, _) => k,
        (None, Some(e1), Some(e2)) => {
            let Some(cert) = &cert else {
                return Err(CliError::Config(
                    "--eps1/--eps2 need a certified zoo problem (use --zoo)".into(),
                ));
            };
            if e1.is_nan() || e2.is_nan() || e1 <= 0.0 || e2 <= 0.0 {
                return Err(CliError::Config(
                    "--eps1 and --eps2 must be positive".into(),
                ));
            }
            match choose_iterations(&problem, cert, &x0, args.lambda0, e1, e2)? {
                Choice::Exact(k) => k,
                Choice::FromBounds(k, bounds) => {
                    iteration_choice = Some(bounds);
                    k
                }
            }
        }
        _ => {
            return Err(CliError::Config(
                "give either --iters or both --eps1 and --eps2".into(),
            ))
        }
    };

    let opts = RunOptions {
        trace_every: args.trace_every,
        f_star: cert.as_ref().map(|c| c.f_star),
    };
    let report =
        run_with(&problem, &x0, args.lambda0, iterations, &opts).map_err(CliError::runtime)?;
    let wall = started.elapsed().as_secs_f64();
    let (f_bar, fbar_bar) = values_at(&problem, &report.x_bar).map_err(CliError::runtime)?;

    let to_stdout = args.out.as_deref() == Some("-");
    let summary: &mut dyn Write = if to_stdout { &mut *err } else { &mut *out };
    let mut lines = Vec::new();
    if let Some(b) = &iteration_choice {
        lines.push(format!(
            "iteration choice: alpha={} C_emp={} C1={} C2={} K={}",
            b.alpha, b.c_emp, b.c1, b.c2, iterations
        ));
    }
    lines.push(format!("iterations: {}", report.iterations_used));
    lines.push(format!("terminated_exactly: {}", report.terminated_exactly));
    lines.push(format!("x_bar: {}", output::vector(&report.x_bar)));
    lines.push(format!("f(x_bar): {f_bar}"));
    lines.push(format!("fbar(x_bar): {fbar_bar}"));
    if let Some(c) = &cert {
        lines.push(format!("f_gap: {}", f_bar - c.f_star));
    }
    for l in &lines {
        writeln!(summary, "{l}").map_err(CliError::runtime)?;
    }

    if let Some(path) = &args.out {
        let mut sink = output::sink(path, out)?;
        match args.format {
            Format::Csv => output::write_csv(&mut *sink, &report.trace)?,
            Format::Json => output::write_json(
                &mut *sink,
                &Envelope {
                    command: "solve",
                    config: &args,
                    iterations: report.iterations_used,
                    wall_time_s: wall,
                    terminated_exactly: report.terminated_exactly,
                    x_bar: &report.x_bar,
                    f_x_bar: f_bar,
                    fbar_x_bar: fbar_bar,
                    iteration_choice: iteration_choice.as_ref(),
                    rows: report.trace.iter().map(JsonRow::from).collect(),
                },
            )?,
        }
    }

    if let (Some(e1), Some(e2), Some(c)) = (args.eps1, args.eps2, &cert) {
        let gap = f_bar - c.f_star;
        if gap > e1 || fbar_bar > e2 {
            return Err(CliError::Runtime(format!(
                "targets missed: f_gap {gap} (eps1 {e1}), fbar {fbar_bar} (eps2 {e2})"
            )));
        }
    }
    Ok(0)
}

enum Choice {
    /// The pilot hit an exact optimum after this many iterations.
    Exact(usize),
    FromBounds(usize, BoundReport),
}

/// Pilot run for `C_emp`, then the smallest `K` whose bounds meet both targets.
fn choose_iterations(
    p: &Problem,
    cert: &Certificate,
    x0: &[f64],
    lambda0: f64,
    eps1: f64,
    eps2: f64,
) -> CliResult<Choice> {
    let pilot: RunReport =
        solver::run(p, x0, lambda0, PILOT_ITERATIONS).map_err(CliError::runtime)?;
    if pilot.terminated_exactly {
        return Ok(Choice::Exact(pilot.iterations_used));
    }
    let bounds = diagnostics::convergence_bounds(p, &pilot, cert).map_err(CliError::runtime)?;
    let k = diagnostics::iterations_for_targets(bounds.c1, bounds.c2, eps1, eps2)
        .map_err(CliError::runtime)?;
    let k = usize::try_from(k)
        .map_err(|_| CliError::Runtime(format!("targets need {k} iterations")))?;
    Ok(Choice::FromBounds(k, bounds))
}
