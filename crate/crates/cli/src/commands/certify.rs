use std::io::Write;

use clap::Args;
use serde::Serialize;
use wda::diagnostics::{check_certificate, CertificateReport, Tolerances};

use super::{load_zoo, select_zoo};
use crate::error::{CliError, CliResult};

#[derive(Args, Debug)]
pub struct CertifyArgs {
    /// Zoo problems to certify (default: all).
    #[arg(long)]
    pub zoo: Vec<String>,
    /// Scale the stored multipliers by this factor before checking.
    #[arg(long)]
    pub perturb: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct CertifyEntry {
    pub problem: String,
    #[serde(flatten)]
    pub report: CertificateReport,
}

pub fn certify(names: &[&str], perturb: Option<f64>) -> CliResult<Vec<CertifyEntry>> {
    let tol = Tolerances::default();
    let mut out = Vec::new();
    for name in names {
        let (p, cert) = load_zoo(name)?;
        let cert = perturb.map_or(cert.clone(), |f| cert.perturbed(f));
        let report = check_certificate(&p, &cert, &tol).map_err(CliError::runtime)?;
        out.push(CertifyEntry {
            problem: name.to_string(),
            report,
        });
    }
    Ok(out)
}

pub fn run(args: CertifyArgs, out: &mut dyn Write, err: &mut dyn Write) -> CliResult<u8> {
    let names = select_zoo(&args.zoo, None)?;
    let entries = certify(&names, args.perturb)?;
    crate::output::emit(
        out,
        &serde_json::to_string_pretty(&entries).map_err(CliError::runtime)?,
    )?;
    let mut ok = true;
    for e in &entries {
        if let Some(f) = e.report.first_failure() {
            ok = false;
            let _ = writeln!(
                err,
                "FAIL {}: {} (margin {:e})",
                e.problem, f.monitor, f.worst_margin
            );
        }
    }
    Ok(if ok { 0 } else { 3 })
}
