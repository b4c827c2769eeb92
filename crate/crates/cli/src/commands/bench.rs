use std::fmt::Write as _;
use std::io::Write;

use clap::Args;
use rayon::prelude::*;
use serde::Serialize;
use wda::diagnostics::{convergence_bounds, fit_rate};
use wda::solver::values_at;
use wda::{run_with, RunOptions};

use super::{load_zoo, pool, select_zoo, ReportFormat};
use crate::error::{CliError, CliResult};
use crate::output::{sci, sci_opt};

#[derive(Args, Debug)]
pub struct BenchArgs {
    /// Iteration counts, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "100,1000,10000,100000")]
    pub iters: Vec<usize>,
    /// Zoo problems to run (default: all).
    #[arg(long)]
    pub zoo: Vec<String>,
    /// Keep only problems whose name contains this text.
    #[arg(long)]
    pub filter: Option<String>,
    #[arg(long, value_enum, default_value_t = ReportFormat::Table)]
    pub format: ReportFormat,
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchPoint {
    pub iterations: usize,
    /// `f(x̄) − f*`, signed.
    pub f_gap: f64,
    pub fbar: f64,
    pub terminated_exactly: bool,
    /// achieved / bound; absent after exact termination.
    pub ratio_f: Option<f64>,
    pub ratio_fbar: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchProblem {
    pub problem: String,
    pub points: Vec<BenchPoint>,
    /// Slope of `ln|f_gap|` against `ln K`; absent with fewer than three usable points.
    pub slope: Option<f64>,
    pub bounds_hold: bool,
}

fn measure(name: &str, k: usize) -> CliResult<BenchPoint> {
    let (p, cert) = load_zoo(name)?;
    let x0 = vec![0.0; p.dim()];
    let opts = RunOptions {
        trace_every: k.max(1),
        f_star: Some(cert.f_star),
    };
    let report = run_with(&p, &x0, 0.0, k, &opts).map_err(CliError::runtime)?;
    let (f, fbar) = values_at(&p, &report.x_bar).map_err(CliError::runtime)?;
    let (ratio_f, ratio_fbar) = if report.terminated_exactly {
        (None, None)
    } else {
        let b = convergence_bounds(&p, &report, &cert).map_err(CliError::runtime)?;
        (
            Some(b.achieved_f_gap / b.bound_f),
            Some(b.achieved_fbar / b.bound_fbar),
        )
    };
    Ok(BenchPoint {
        iterations: k,
        f_gap: f - cert.f_star,
        fbar,
        terminated_exactly: report.terminated_exactly,
        ratio_f,
        ratio_fbar,
    })
}

pub fn bench(names: &[&str], ks: &[usize]) -> CliResult<Vec<BenchProblem>> {
    let jobs: Vec<(&str, usize)> = names
        .iter()
        .flat_map(|n| ks.iter().map(move |k| (*n, *k)))
        .collect();
    let results: Vec<CliResult<(String, BenchPoint)>> = pool()?.install(|| {
        jobs.par_iter()
            .map(|(n, k)| measure(n, *k).map(|pt| (n.to_string(), pt)))
            .collect()
    });
    let mut out: Vec<BenchProblem> = Vec::new();
    for r in results {
        let (name, pt) = r?;
        match out.iter_mut().find(|b| b.problem == name) {
            Some(b) => b.points.push(pt),
            None => out.push(BenchProblem {
                problem: name,
                points: vec![pt],
                slope: None,
                bounds_hold: true,
            }),
        }
    }
    out.sort_by(|a, b| a.problem.cmp(&b.problem));
    for b in &mut out {
        b.points.sort_by_key(|p| p.iterations);
        let usable: Vec<(f64, f64)> = b
            .points
            .iter()
            .filter(|p| p.iterations > 0 && p.f_gap != 0.0)
            .map(|p| (p.iterations as f64, p.f_gap.abs()))
            .collect();
        b.slope = fit_rate(&usable).ok();
        b.bounds_hold = b
            .points
            .iter()
            .all(|p| p.ratio_f.is_none_or(|r| r <= 1.0) && p.ratio_fbar.is_none_or(|r| r <= 1.0));
    }
    Ok(out)
}

pub fn run(args: BenchArgs, out: &mut dyn Write, err: &mut dyn Write) -> CliResult<u8> {
    let names = select_zoo(&args.zoo, args.filter.as_deref())?;
    let mut ks = args.iters.clone();
    ks.sort_unstable();
    ks.dedup();
    if ks.is_empty() {
        return Err(CliError::Config("no iteration counts given".into()));
    }
    let table = bench(&names, &ks)?;
    match args.format {
        ReportFormat::Json => crate::output::emit(
            out,
            &serde_json::to_string_pretty(&table).map_err(CliError::runtime)?,
        )?,
        ReportFormat::Table => crate::output::emit(out, &table_text(&table))?,
    }
    let ok = table.iter().all(|b| b.bounds_hold);
    if !ok {
        let _ = writeln!(err, "error: achieved values exceed the convergence bound");
    }
    Ok(if ok { 0 } else { 3 })
}

fn table_text(table: &[BenchProblem]) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:<22} {:>8} {:>11} {:>11} {:>11} {:>11}",
        "problem", "K", "f_gap", "fbar", "ratio_f", "ratio_fbar"
    );
    for b in table {
        for p in &b.points {
            let exact = if p.terminated_exactly { "  exact" } else { "" };
            let _ = writeln!(
                s,
                "{:<22} {:>8} {:>11} {:>11} {:>11} {:>11}{exact}",
                b.problem,
                p.iterations,
                sci(p.f_gap),
                sci(p.fbar),
                sci_opt(p.ratio_f),
                sci_opt(p.ratio_fbar)
            );
        }
        let slope = b.slope.map_or("n/a".to_string(), |v| format!("{v:.3}"));
        let _ = writeln!(s, "{:<22} slope {slope}", b.problem);
    }
    s.pop();
    s
}
