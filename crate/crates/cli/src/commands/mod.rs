pub mod bench;
pub mod certify;
pub mod check;
pub mod compare;
pub mod solve;

use std::path::Path;

use clap::ValueEnum;
use serde::Serialize;
use wda::zoo::{self, Certificate};
use wda::{parse_problem, Problem};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReportFormat {
    Table,
    Json,
}

pub fn load_file(path: &Path) -> CliResult<Problem> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read `{}`: {e}", path.display())))?;
    parse_problem(&text).map_err(CliError::from_setup)
}

pub fn load_zoo(name: &str) -> CliResult<(Problem, Certificate)> {
    zoo::get_problem(name).map_err(CliError::from_setup)
}

/// Zoo names to run: the explicit list if given, else all, narrowed by `filter`.
pub fn select_zoo(names: &[String], filter: Option<&str>) -> CliResult<Vec<&'static str>> {
    let mut chosen: Vec<&'static str> = if names.is_empty() {
        zoo::NAMES.to_vec()
    } else {
        let mut v = Vec::new();
        for n in names {
            v.push(zoo::entry(n).map_err(CliError::from_setup)?.name);
        }
        v
    };
    if let Some(f) = filter {
        chosen.retain(|n| n.contains(f));
    }
    chosen.sort_unstable();
    chosen.dedup();
    if chosen.is_empty() {
        return Err(CliError::Config("no zoo problems selected".into()));
    }
    Ok(chosen)
}

/// Worker pool sized by `WDA_THREADS` when set.
pub fn pool() -> CliResult<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var("WDA_THREADS") {
        let n: usize = v.trim().parse().map_err(|_| {
            CliError::Config(format!("WDA_THREADS must be a positive integer, got `{v}`"))
        })?;
        b = b.num_threads(n.max(1));
    }
    b.build().map_err(CliError::runtime)
}
