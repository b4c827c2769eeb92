//! Numeric monitors over solver traces.
//!
//! Each monitor compares two sides of an inequality that holds exactly in real
//! arithmetic; the absolute tolerances in [`Tolerances`] only absorb rounding.
//! Constants derived from the subgradient bound use the empirical maximum of
//! `‖G(w_k)‖` along the run in place of the existential constant.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::penalty::{self, PrimalDualPoint};
use crate::problem::Problem;
use crate::solver::RunReport;
use crate::vector::{dist, dot};
use crate::zoo::Certificate;

/// Everything the iteration knows about `w_k`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRow {
    pub k: usize,
    pub x: Vec<f64>,
    pub lambda: f64,
    /// `f(x_k)`
    pub f_x: f64,
    /// `f̄(x_k)`, zero for unconstrained problems.
    pub fbar_x: f64,
    pub g_norm: f64,
    /// `β_k`
    pub beta: f64,
    /// `‖s_{k+1}‖ = ‖s_k + Ḡ_k‖`
    pub s_norm: f64,
    /// `Ḡ_k`; empty on a terminal zero-subgradient row.
    pub direction: Vec<f64>,
    /// `x̂_{k+1}/ŝ_{k+1}`; on the last row this is the returned point.
    pub x_bar_running: Vec<f64>,
    /// `f(x̄) − f*` when the optimal value is known.
    pub f_gap_running: Option<f64>,
    pub fbar_at_xbar: f64,
    pub negative_lambda: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tolerances {
    pub beta: f64,
    /// Multiplied by `k̄`.
    pub prelim_per_iteration: f64,
    pub bounded_iterates: f64,
    pub saddle: f64,
    pub feasibility: f64,
    pub slackness: f64,
    pub stationarity: f64,
    pub lambda_sum: f64,
    pub objective_value: f64,
    /// Absolute, for the multiplier recursion.
    pub lambda_identity: f64,
    /// Relative gap under which `max` branches count as tied.
    pub tie: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            beta: 1e-12,
            prelim_per_iteration: 1e-7,
            bounded_iterates: 1e-9,
            saddle: 1e-9,
            feasibility: 1e-9,
            slackness: 1e-9,
            stationarity: 1e-8,
            lambda_sum: 1e-12,
            objective_value: 1e-9,
            lambda_identity: 1e-9,
            tie: 1e-12,
        }
    }
}

/// Outcome of one monitor. `worst_margin` is the smallest `rhs − lhs` seen; the
/// monitor passes when it is at least `−tolerance`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonitorReport {
    pub monitor: String,
    pub passed: bool,
    pub worst_margin: f64,
    /// Iteration (or check index) of the worst margin.
    pub location: Option<usize>,
    pub first_violation: Option<usize>,
    pub note: Option<String>,
}

struct MarginTracker {
    name: String,
    worst: f64,
    worst_at: Option<usize>,
    first_violation: Option<usize>,
}

impl MarginTracker {
    fn new(name: &str) -> Self {
        MarginTracker {
            name: name.to_string(),
            worst: f64::INFINITY,
            worst_at: None,
            first_violation: None,
        }
    }

    /// Record one instance of `lhs ≤ rhs + tol(at)`.
    fn observe(&mut self, at: usize, margin: f64, tol: f64) {
        if margin < self.worst || margin.is_nan() {
            self.worst = margin;
            self.worst_at = Some(at);
        }
        if (margin < -tol || margin.is_nan()) && self.first_violation.is_none() {
            self.first_violation = Some(at);
        }
    }

    fn finish(self, note: Option<String>) -> MonitorReport {
        MonitorReport {
            monitor: self.name,
            passed: self.first_violation.is_none(),
            worst_margin: self.worst,
            location: self.worst_at,
            first_violation: self.first_violation,
            note,
        }
    }
}

/// `1/(1+√3) + √(2k+1)`
pub fn beta_upper_bound(k: usize) -> f64 {
    1.0 / (1.0 + 3f64.sqrt()) + ((2 * k + 1) as f64).sqrt()
}

/// Checks `β_k ≤ 1/(1+√3) + √(2k+1)` for `k = 0..=k_max`.
pub fn check_beta_bound(k_max: usize, tol: f64) -> MonitorReport {
    let mut t = MarginTracker::new("beta_bound");
    let mut beta = 1.0;
    for k in 0..=k_max {
        t.observe(k, beta_upper_bound(k) - beta, tol);
        beta += 1.0 / beta;
    }
    t.finish(None)
}

fn require_full_trace(report: &RunReport) -> Result<()> {
    if report.thinned {
        return Err(Error::InvalidArgument(
            "monitor needs an unthinned trace".into(),
        ));
    }
    Ok(())
}

/// `Σ_{k=1}^{k̄} ⟨w_k − w_0, Ḡ_k⟩ ≤ −‖s_{k̄+1}‖²/(2β_k̄) + β_k̄/2` for every traced `k̄ ≥ 1`,
/// with tolerance `tol_per_iteration · k̄`.
pub fn check_prelim_inequality(
    report: &RunReport,
    tol_per_iteration: f64,
) -> Result<MonitorReport> {
    require_full_trace(report)?;
    let mut t = MarginTracker::new("prelim_inequality");
    let w0 = report.stacked_w0();
    let mut lhs = 0.0;
    for row in report.trace.iter().skip(1) {
        if row.direction.is_empty() {
            break;
        }
        let wk = report.stacked(row);
        let diff: Vec<f64> = wk.iter().zip(&w0).map(|(a, b)| a - b).collect();
        lhs += dot(&diff, &row.direction);
        let rhs = -row.s_norm * row.s_norm / (2.0 * row.beta) + row.beta / 2.0;
        let kbar = row.k;
        t.observe(kbar, rhs - lhs, tol_per_iteration * kbar as f64);
    }
    let note = (t.worst_at.is_none()).then(|| "vacuous: no iterations beyond k = 0".to_string());
    Ok(t.finish(note))
}

/// `w*` in the layout of the run: `[x*; λ*]` for constrained problems, `x*` otherwise.
pub fn stacked_optimum(report: &RunReport, cert: &Certificate) -> Vec<f64> {
    let mut w = cert.x_star.clone();
    if report.constrained {
        w.push(cert.lambda_star);
    }
    w
}

/// `‖w_k − w*‖ ≤ ‖w_0 − w*‖ + 1` along the trace.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundedIterates {
    pub report: MonitorReport,
    pub bound: f64,
    /// `max_k ‖w_k − w*‖ / bound`.
    pub max_ratio: f64,
}

pub fn check_bounded_iterates(report: &RunReport, cert: &Certificate, tol: f64) -> BoundedIterates {
    let w_star = stacked_optimum(report, cert);
    let bound = dist(&report.stacked_w0(), &w_star) + 1.0;
    let mut t = MarginTracker::new("bounded_iterates");
    let mut max_ratio: f64 = 0.0;
    for row in &report.trace {
        let d = dist(&report.stacked(row), &w_star);
        max_ratio = max_ratio.max(d / bound);
        t.observe(row.k, bound - d, tol);
    }
    BoundedIterates {
        report: t.finish(None),
        bound,
        max_ratio,
    }
}

/// `F(x*, λ_k) ≤ F(x_k, λ*)` along the trace; `f(x*) ≤ f(x_k)` without constraints.
pub fn check_saddle(
    p: &Problem,
    report: &RunReport,
    cert: &Certificate,
    tol: f64,
) -> Result<MonitorReport> {
    let mut t = MarginTracker::new("saddle");
    for row in &report.trace {
        let (lhs, rhs) = if report.constrained {
            (
                penalty::penalty_value(p, &PrimalDualPoint::new(cert.x_star.clone(), row.lambda))?,
                row.f_x + cert.lambda_star * row.fbar_x,
            )
        } else {
            (p.objective().eval(&cert.x_star)?, row.f_x)
        };
        t.observe(row.k, rhs - lhs, tol);
    }
    Ok(t.finish(None))
}

/// `λ_{k+1} = λ_0 + (Σ_{j≤k} f̄(x_j)/‖G(w_j)‖)/β_k` along the trace.
///
/// With every `f̄(x_j) ≥ 0` the sum is nondecreasing, but the division by the
/// growing `β_k` still lets `λ` fall, so decreases are counted in the note rather
/// than failed.
pub fn check_lambda_identity(report: &RunReport, tol: f64) -> Result<MonitorReport> {
    require_full_trace(report)?;
    let mut t = MarginTracker::new("lambda_identity");
    if !report.constrained {
        return Ok(t.finish(Some("not applicable: no constraints".into())));
    }
    let mut acc = 0.0;
    let mut decreases = 0usize;
    for pair in report.trace.windows(2) {
        let (prev, next) = (&pair[0], &pair[1]);
        acc += prev.fbar_x / prev.g_norm;
        let expected = report.w0.lambda + acc / prev.beta;
        t.observe(next.k, -(next.lambda - expected).abs(), tol);
        if next.lambda < prev.lambda {
            decreases += 1;
        }
    }
    let nonneg = report.trace.iter().all(|r| r.fbar_x >= 0.0);
    let note = format!(
        "{decreases} decreases of lambda; f̄(x_k) {} along the trace",
        if nonneg { "≥ 0" } else { "changes sign" }
    );
    Ok(t.finish(Some(note)))
}

/// Right-hand sides of the convergence bounds, evaluated with the empirical constant.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    /// `max_k ‖G(w_k)‖`; empirical stand-in for the constant `C`.
    pub c_emp: f64,
    /// `C(‖w₀−w*‖² + 1)`
    pub c1: f64,
    /// `C(4(‖w₀−w*‖ + 1)² + 1)`
    pub c2: f64,
    pub alpha: f64,
    pub iterations: usize,
    pub dist_w0_wstar: f64,
    pub bound_f: f64,
    pub bound_fbar: f64,
    pub achieved_f_gap: f64,
    pub achieved_fbar: f64,
}

impl BoundReport {
    pub fn holds(&self) -> bool {
        self.achieved_f_gap <= self.bound_f && self.achieved_fbar <= self.bound_fbar
    }
}

/// `(1/(1+√3) + √(2K+1)) / (2(K+1))`
fn rate_factor(k: usize) -> f64 {
    beta_upper_bound(k) / (2.0 * (k as f64 + 1.0))
}

pub fn convergence_bounds(
    p: &Problem,
    report: &RunReport,
    cert: &Certificate,
) -> Result<BoundReport> {
    if report.terminated_exactly {
        return Err(Error::InvalidArgument(
            "run terminated at an exact optimum; bounds do not apply".into(),
        ));
    }
    let c = report.max_g_norm;
    let dist_w0_wstar = dist(&report.stacked_w0(), &stacked_optimum(report, cert));
    let c1 = c * (dist_w0_wstar.powi(2) + 1.0);
    let c2 = c * (4.0 * (dist_w0_wstar + 1.0).powi(2) + 1.0);
    let factor = rate_factor(report.iterations_used);
    let f_bar = p.objective().eval(&report.x_bar)?;
    let achieved_fbar = if p.is_constrained() {
        penalty::violation(p, &report.x_bar)?
    } else {
        0.0
    };
    Ok(BoundReport {
        c_emp: c,
        c1,
        c2,
        alpha: alpha(),
        iterations: report.iterations_used,
        dist_w0_wstar,
        bound_f: c1 * factor,
        bound_fbar: c2 * factor,
        achieved_f_gap: f_bar - cert.f_star,
        achieved_fbar,
    })
}

/// `½(1/(√8(1+√3)) + 1)²`
pub fn alpha() -> f64 {
    0.5 * (1.0 / (8f64.sqrt() * (1.0 + 3f64.sqrt())) + 1.0).powi(2)
}

/// Smallest `K ≥ 1` with `K ≥ α·max(C₁/ε₁, C₂/ε₂)²`.
pub fn iterations_for_targets(c1: f64, c2: f64, eps1: f64, eps2: f64) -> Result<u64> {
    if [c1, c2, eps1, eps2].iter().any(|v| v.is_nan() || *v <= 0.0) {
        return Err(Error::InvalidArgument(
            "constants and targets must be positive".into(),
        ));
    }
    let ratio = (c1 / eps1).max(c2 / eps2);
    let k = (alpha() * ratio * ratio).ceil();
    if !k.is_finite() || k > u64::MAX as f64 {
        return Err(Error::InvalidArgument("iteration count overflows".into()));
    }
    Ok((k as u64).max(1))
}

/// Least-squares slope of `ln(gap)` against `ln(K)`.
pub fn fit_rate(points: &[(f64, f64)]) -> Result<f64> {
    if points.len() < 3 {
        return Err(Error::InvalidArgument("need at least three points".into()));
    }
    if points
        .iter()
        .any(|&(k, g)| k.is_nan() || g.is_nan() || k <= 0.0 || g <= 0.0)
    {
        return Err(Error::InvalidArgument(
            "iteration counts and gaps must be positive".into(),
        ));
    }
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidArgument(
            "iteration counts must differ".into(),
        ));
    }
    Ok(sxy / sxx)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertificateReport {
    pub passed: bool,
    pub checks: Vec<MonitorReport>,
}

impl CertificateReport {
    pub fn first_failure(&self) -> Option<&MonitorReport> {
        self.checks.iter().find(|c| !c.passed)
    }
}

const VERTEX_LIMIT: usize = 64;

/// KKT checks: feasibility, multiplier signs, complementary slackness, stationarity,
/// `λ* = Σμ* + Σ|θ*|`, and `f(x*) = f*`.
///
/// Stationarity is the distance from the origin to
/// `∂f(x*) + Σμ*_i ∂f_i(x*) + Σθ*_i a_i`, using the tree's subdifferential
/// vertices so optima at kinks are handled.
pub fn check_certificate(
    p: &Problem,
    cert: &Certificate,
    tol: &Tolerances,
) -> Result<CertificateReport> {
    let d = p.dim();
    if cert.x_star.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: cert.x_star.len(),
        });
    }
    if cert.mu_star.len() != p.inequalities().len() || cert.theta_star.len() != p.equalities().len()
    {
        return Err(Error::InvalidArgument(
            "multiplier counts do not match the constraints".into(),
        ));
    }
    let x = &cert.x_star;
    let single = |name: &str, margin: f64, tolerance: f64| {
        let mut t = MarginTracker::new(name);
        t.observe(0, margin, tolerance);
        t.finish(None)
    };
    let mut checks = Vec::new();

    let fbar = if p.is_constrained() {
        penalty::violation(p, x)?
    } else {
        0.0
    };
    checks.push(single("feasibility", -fbar, tol.feasibility));

    let min_mu = cert.mu_star.iter().cloned().fold(f64::INFINITY, f64::min);
    checks.push(single(
        "multiplier_sign",
        if min_mu.is_finite() { min_mu } else { 0.0 },
        0.0,
    ));

    let mut slack = 0.0;
    for (mu, f) in cert.mu_star.iter().zip(p.inequalities()) {
        slack += mu * f.eval(x)?;
    }
    checks.push(single(
        "complementary_slackness",
        -slack.abs(),
        tol.slackness,
    ));

    let station = stationarity_residual(p, cert, tol.tie)?;
    checks.push(single("stationarity", -station, tol.stationarity));

    let sum =
        cert.mu_star.iter().sum::<f64>() + cert.theta_star.iter().map(|t| t.abs()).sum::<f64>();
    checks.push(single(
        "lambda_sum",
        -(cert.lambda_star - sum).abs(),
        tol.lambda_sum,
    ));

    let fx = p.objective().eval(x)?;
    checks.push(single(
        "objective_value",
        -(fx - cert.f_star).abs(),
        tol.objective_value,
    ));

    Ok(CertificateReport {
        passed: checks.iter().all(|c| c.passed),
        checks,
    })
}

/// Minimum norm over `∂f(x*) + Σμ_i ∂f_i(x*) + Σθ_i a_i`.
pub fn stationarity_residual(p: &Problem, cert: &Certificate, tie: f64) -> Result<f64> {
    let x = &cert.x_star;
    let d = p.dim();
    let mut fixed = vec![0.0; d];
    for (theta, h) in cert.theta_star.iter().zip(p.equalities()) {
        crate::vector::axpy(*theta, &h.a, &mut fixed);
    }
    let mut parts: Vec<Option<Vec<Vec<f64>>>> =
        vec![p
            .objective()
            .subdifferential_vertices(x, tie, VERTEX_LIMIT)?];
    let mut fallback = p.objective().subgradient(x)?;
    for (mu, f) in cert.mu_star.iter().zip(p.inequalities()) {
        if *mu != 0.0 {
            let g = f.subgradient(x)?;
            crate::vector::axpy(*mu, &g, &mut fallback);
            parts.push(
                f.subdifferential_vertices(x, tie, VERTEX_LIMIT)?
                    .map(|pts| {
                        pts.into_iter()
                            .map(|v| v.iter().map(|c| mu * c).collect())
                            .collect()
                    }),
            );
        }
    }
    crate::vector::axpy(1.0, &fixed, &mut fallback);

    let mut acc: Vec<Vec<f64>> = vec![fixed];
    for part in parts {
        let Some(pts) = part else {
            return Ok(crate::vector::norm(&fallback));
        };
        if acc.len() * pts.len() > VERTEX_LIMIT {
            return Ok(crate::vector::norm(&fallback));
        }
        acc = acc
            .iter()
            .flat_map(|a| {
                pts.iter()
                    .map(move |b| a.iter().zip(b).map(|(u, v)| u + v).collect::<Vec<f64>>())
            })
            .collect();
    }
    Ok(min_norm_in_hull(&acc))
}

/// Distance from the origin to the convex hull of `points`, by enumerating affinely
/// independent subsets of at most `d + 1` points.
pub fn min_norm_in_hull(points: &[Vec<f64>]) -> f64 {
    let d = points.first().map_or(0, Vec::len);
    let mut best = points
        .iter()
        .map(|p| crate::vector::norm(p))
        .fold(f64::INFINITY, f64::min);
    let max_size = points.len().min(d + 1);
    let mut subset = Vec::new();
    for size in 2..=max_size {
        for_each_subset(points.len(), size, 0, &mut subset, &mut |idx| {
            if let Some(v) = affine_min_norm(points, idx) {
                best = best.min(v);
            }
        });
    }
    best
}

fn for_each_subset(
    n: usize,
    size: usize,
    start: usize,
    cur: &mut Vec<usize>,
    f: &mut dyn FnMut(&[usize]),
) {
    if cur.len() == size {
        f(cur);
        return;
    }
    for i in start..n {
        cur.push(i);
        for_each_subset(n, size, i + 1, cur, f);
        cur.pop();
    }
}

/// Minimum-norm point of the affine hull of the selected points, if it lies in
/// their convex hull.
fn affine_min_norm(points: &[Vec<f64>], idx: &[usize]) -> Option<f64> {
    let m = idx.len();
    // [Gram 1; 1ᵀ 0] [α; ν] = [0; 1]
    let mut a = vec![vec![0.0; m + 1]; m + 1];
    let mut b = vec![0.0; m + 1];
    for i in 0..m {
        for j in 0..m {
            a[i][j] = dot(&points[idx[i]], &points[idx[j]]);
        }
        a[i][m] = 1.0;
        a[m][i] = 1.0;
    }
    b[m] = 1.0;
    let sol = solve_dense(a, b)?;
    let weights = &sol[..m];
    if weights.iter().any(|w| *w < -1e-12) {
        return None;
    }
    let d = points[idx[0]].len();
    let mut p = vec![0.0; d];
    for (w, &i) in weights.iter().zip(idx) {
        crate::vector::axpy(*w, &points[i], &mut p);
    }
    Some(crate::vector::norm(&p))
}

/// Gaussian elimination with partial pivoting.
fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    let scale = a
        .iter()
        .flatten()
        .fold(0.0f64, |m, v| m.max(v.abs()))
        .max(1.0);
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() <= 1e-13 * scale {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        let (upper, lower) = a.split_at_mut(col + 1);
        let pivot_row = &upper[col];
        for (offset, row) in lower.iter_mut().enumerate() {
            let f = row[col] / pivot_row[col];
            for (v, p) in row[col..].iter_mut().zip(&pivot_row[col..]) {
                *v -= f * p;
            }
            b[col + 1 + offset] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    Some(x)
}
