use std::fmt::Write as _;
use std::io::Write;

use clap::Args;
use serde::Serialize;
use wda::baseline::{comparison_case, projected_subgradient};
use wda::solver::values_at;
use wda::{run_with, RunOptions};

use super::{load_zoo, ReportFormat};
use crate::error::{CliError, CliResult};
use crate::output::{sci, sci_opt};

#[derive(Args, Debug)]
pub struct CompareArgs {
    /// Zoo problems with a projectable feasible set.
    #[arg(long, default_values_t = ["shifted-quad".to_string(), "equality-quad".to_string()])]
    pub zoo: Vec<String>,
    /// Iteration counts, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "100,1000,10000")]
    pub iters: Vec<usize>,
    #[arg(long, value_enum, default_value_t = ReportFormat::Table)]
    pub format: ReportFormat,
}

#[derive(Debug, Clone, Serialize)]
pub struct CompareRow {
    pub problem: String,
    pub iterations: usize,
    /// `|f(x̄) − f*|` for weighted dual averaging.
    pub wda_gap: f64,
    pub wda_fbar: f64,
    /// `|f(x̄) − f*|` for projected subgradient descent.
    pub baseline_gap: f64,
    pub baseline_violation: f64,
    /// `wda_gap / baseline_gap`, absent when the baseline is exact.
    pub ratio: Option<f64>,
}

pub fn compare_one(name: &str, k: usize) -> CliResult<CompareRow> {
    let case = comparison_case(name).map_err(CliError::from_setup)?;
    let (p, cert) = load_zoo(name)?;
    let opts = RunOptions {
        trace_every: k.max(1),
        f_star: Some(cert.f_star),
    };
    let wda = run_with(&p, &case.start, 0.0, k, &opts).map_err(CliError::runtime)?;
    let (f_wda, fbar_wda) = values_at(&p, &wda.x_bar).map_err(CliError::runtime)?;
    let base = projected_subgradient(p.objective(), &case.set, &case.start, k)
        .map_err(CliError::runtime)?;
    let f_base = p.objective().eval(&base.x_bar).map_err(CliError::runtime)?;
    let wda_gap = (f_wda - cert.f_star).abs();
    let baseline_gap = (f_base - cert.f_star).abs();
    Ok(CompareRow {
        problem: case.name.to_string(),
        iterations: k,
        wda_gap,
        wda_fbar: fbar_wda,
        baseline_gap,
        baseline_violation: case.set.violation(&base.x_bar),
        ratio: (baseline_gap > 0.0).then(|| wda_gap / baseline_gap),
    })
}

pub fn run(args: CompareArgs, out: &mut dyn Write, _err: &mut dyn Write) -> CliResult<u8> {
    let mut names = args.zoo.clone();
    names.sort();
    names.dedup();
    let mut ks = args.iters.clone();
    ks.sort_unstable();
    ks.dedup();
    let mut rows = Vec::new();
    for n in &names {
        for k in &ks {
            rows.push(compare_one(n, *k)?);
        }
    }
    match args.format {
        ReportFormat::Json => crate::output::emit(
            out,
            &serde_json::to_string_pretty(&rows).map_err(CliError::runtime)?,
        )?,
        ReportFormat::Table => {
            let mut s = String::new();
            let _ = writeln!(
                s,
                "{:<16} {:>8} {:>11} {:>11} {:>13} {:>11}",
                "problem", "K", "wda_gap", "wda_fbar", "baseline_gap", "ratio"
            );
            for r in &rows {
                let _ = writeln!(
                    s,
                    "{:<16} {:>8} {:>11} {:>11} {:>13} {:>11}",
                    r.problem,
                    r.iterations,
                    sci(r.wda_gap),
                    sci(r.wda_fbar),
                    sci(r.baseline_gap),
                    sci_opt(r.ratio)
                );
            }
            s.pop();
            crate::output::emit(out, &s)?;
        }
    }
    Ok(0)
}
