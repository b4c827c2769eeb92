//! Trace and report writers.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use serde::Serialize;
use wda::diagnostics::TraceRow;
use wda::problem::format_number;

use crate::error::{CliError, CliResult};

pub const CSV_HEADER: [&str; 9] = [
    "k",
    "f_x",
    "fbar_x",
    "lambda",
    "beta",
    "G_norm",
    "f_gap_running",
    "fbar_at_xbar",
    "negative_lambda",
];

/// Opens `path` for writing; `-` means `stdout`.
pub fn sink<'a>(path: &str, stdout: &'a mut dyn Write) -> CliResult<Box<dyn Write + 'a>> {
    if path == "-" {
        return Ok(Box::new(stdout));
    }
    let file = File::create(Path::new(path))
        .map_err(|e| CliError::Runtime(format!("cannot create `{path}`: {e}")))?;
    Ok(Box::new(BufWriter::new(file)))
}

pub fn write_csv(out: &mut dyn Write, rows: &[TraceRow]) -> CliResult<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER).map_err(CliError::runtime)?;
    for r in rows {
        w.write_record([
            r.k.to_string(),
            format_number(r.f_x),
            format_number(r.fbar_x),
            format_number(r.lambda),
            format_number(r.beta),
            format_number(r.g_norm),
            r.f_gap_running.map(format_number).unwrap_or_default(),
            format_number(r.fbar_at_xbar),
            r.negative_lambda.to_string(),
        ])
        .map_err(CliError::runtime)?;
    }
    w.flush().map_err(CliError::runtime)
}

/// One CSV row in JSON form.
#[derive(Serialize)]
pub struct JsonRow {
    pub k: usize,
    pub f_x: f64,
    pub fbar_x: f64,
    pub lambda: f64,
    pub beta: f64,
    #[serde(rename = "G_norm")]
    pub g_norm: f64,
    pub f_gap_running: Option<f64>,
    pub fbar_at_xbar: f64,
    pub negative_lambda: bool,
}

impl From<&TraceRow> for JsonRow {
    fn from(r: &TraceRow) -> Self {
        JsonRow {
            k: r.k,
            f_x: r.f_x,
            fbar_x: r.fbar_x,
            lambda: r.lambda,
            beta: r.beta,
            g_norm: r.g_norm,
            f_gap_running: r.f_gap_running,
            fbar_at_xbar: r.fbar_at_xbar,
            negative_lambda: r.negative_lambda,
        }
    }
}

pub fn write_json<T: Serialize>(out: &mut dyn Write, value: &T) -> CliResult<()> {
    serde_json::to_writer_pretty(&mut *out, value).map_err(CliError::runtime)?;
    writeln!(out)
        .and_then(|_| out.flush())
        .map_err(CliError::runtime)
}

/// `[a, b, c]` with shortest round-trip numbers.
pub fn vector(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format_number(*x)).collect();
    format!("[{}]", parts.join(", "))
}

/// Fixed-width scientific notation for tables.
pub fn sci(x: f64) -> String {
    format!("{x:.3e}")
}

pub fn sci_opt(x: Option<f64>) -> String {
    x.map(sci).unwrap_or_else(|| "n/a".into())
}

/// Writes `text` and a newline; a closed pipe is not an error.
pub fn emit(out: &mut dyn Write, text: &str) -> CliResult<()> {
    match writeln!(out, "{text}").and_then(|_| out.flush()) {
        Err(e) if e.kind() != io::ErrorKind::BrokenPipe => Err(CliError::runtime(e)),
        _ => Ok(()),
    }
}
