//! `wda`: solve convex programs by weighted dual averaging, benchmark the
//! built-in problems and run the diagnostic suites.
//!
//! Exit codes: 0 success, 1 unparseable problem, 2 invalid configuration,
//! 3 runtime or monitor failure.

use std::ffi::OsString;
use std::io::Write;

use clap::{Parser, Subcommand};

pub mod commands;
pub mod error;
pub mod output;

use commands::{bench, certify, check, compare, solve};

#[derive(Parser)]
#[command(
    name = "wda",
    version,
    about = "Weighted dual averaging for constrained convex problems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a problem file or a zoo problem and optionally write its trace.
    Solve(solve::SolveArgs),
    /// Run zoo problems at several iteration counts and fit the rate.
    Bench(bench::BenchArgs),
    /// Run the invariant monitors on fresh traces.
    Check(check::CheckArgs),
    /// Compare against projected subgradient descent.
    Compare(compare::CompareArgs),
    /// Verify the optimality certificates of zoo problems.
    Certify(certify::CertifyArgs),
}

/// Runs with the process's standard streams.
pub fn run_cli<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let mut out = std::io::stdout().lock();
    let mut err = std::io::stderr();
    run_cli_with(args, &mut out, &mut err)
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run_cli_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let target: &mut dyn Write = if e.use_stderr() { err } else { out };
            let _ = write!(target, "{}", e.render());
            return code;
        }
    };
    let result = match cli.command {
        Command::Solve(a) => solve::run(a, out, err),
        Command::Bench(a) => bench::run(a, out, err),
        Command::Check(a) => check::run(a, out, err),
        Command::Compare(a) => compare::run(a, out, err),
        Command::Certify(a) => certify::run(a, out, err),
    };
    let _ = out.flush();
    result.unwrap_or_else(|e| {
        let _ = writeln!(err, "error: {e}");
        e.exit_code()
    })
}
