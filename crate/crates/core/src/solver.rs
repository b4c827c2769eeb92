//! Weighted dual averaging on the stacked variable `w = [x; λ]`.
//!
//! Each iteration normalizes `Ḡ_k = [G_x(w_k); −G_λ(w_k)] / ‖G(w_k)‖`, accumulates
//! it in `s`, and moves to `w_{k+1} = w_0 − s_{k+1}/β_k` with `β_{k+1} = β_k + 1/β_k`.
//! The output is the average of the visited `x_k` weighted by `1/‖G(w_k)‖`.
//!
//! Problems without constraints run the same recursion on `x` alone with `G = g(x)`.

use crate::diagnostics::TraceRow;
use crate::error::{Error, Result};
use crate::penalty::{self, PrimalDualPoint, SubgradientSample};
use crate::problem::Problem;
use crate::vector::{axpy, norm, scaled};

/// `‖G(w_k)‖` at or below this is treated as an exact zero subgradient.
pub const ZERO_SUBGRADIENT_TOL: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq)]
pub struct SolverState {
    w0: PrimalDualPoint,
    w: PrimalDualPoint,
    s: Vec<f64>,
    beta: f64,
    s_hat: f64,
    x_hat: Vec<f64>,
    k: usize,
    constrained: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Step {
    Continued,
    /// `G(w_k) = 0`, so `x_k` is optimal.
    ExactOptimum(Vec<f64>),
}

impl SolverState {
    pub fn init(p: &Problem, x0: &[f64], lambda0: f64) -> Result<Self> {
        if lambda0 < 0.0 || lambda0.is_nan() {
            return Err(Error::NegativeMultiplier(lambda0));
        }
        if x0.len() != p.dim() {
            return Err(Error::DimensionMismatch {
                expected: p.dim(),
                got: x0.len(),
            });
        }
        let constrained = p.is_constrained();
        let w0 = PrimalDualPoint::new(x0.to_vec(), lambda0);
        let s_len = if constrained { p.dim() + 1 } else { p.dim() };
        Ok(SolverState {
            w: w0.clone(),
            w0,
            s: vec![0.0; s_len],
            beta: 1.0,
            s_hat: 0.0,
            x_hat: vec![0.0; p.dim()],
            k: 0,
            constrained,
        })
    }

    pub fn w0(&self) -> &PrimalDualPoint {
        &self.w0
    }

    pub fn w(&self) -> &PrimalDualPoint {
        &self.w
    }

    pub fn s(&self) -> &[f64] {
        &self.s
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn s_hat(&self) -> f64 {
        self.s_hat
    }

    pub fn x_hat(&self) -> &[f64] {
        &self.x_hat
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn is_constrained(&self) -> bool {
        self.constrained
    }

    /// `G(w_k)`; for unconstrained problems `g(x_k)` with a zero λ-part.
    pub fn evaluate(&self, p: &Problem) -> Result<SubgradientSample> {
        if self.constrained {
            penalty::subgradient_sample(p, &self.w)
        } else {
            Ok(SubgradientSample::new(
                p.objective().subgradient(&self.w.x)?,
                0.0,
            ))
        }
    }

    /// The unit vector `Ḡ_k` added to `s`.
    pub fn direction(&self, sample: &SubgradientSample) -> Vec<f64> {
        let mut dir = scaled(1.0 / sample.norm, &sample.g_x);
        if self.constrained {
            dir.push(-sample.g_lambda / sample.norm);
        }
        dir
    }

    /// `ŝ += 1/‖G‖`, `x̂ += x_k/‖G‖`.
    fn accumulate(&mut self, sample: &SubgradientSample) {
        self.s_hat += 1.0 / sample.norm;
        axpy(1.0 / sample.norm, &self.w.x, &mut self.x_hat);
    }

    fn advance(&mut self, direction: &[f64]) {
        axpy(1.0, direction, &mut self.s);
        let d = self.w0.x.len();
        for i in 0..d {
            self.w.x[i] = self.w0.x[i] - self.s[i] / self.beta;
        }
        if self.constrained {
            self.w.lambda = self.w0.lambda - self.s[d] / self.beta;
        }
        self.beta += 1.0 / self.beta;
        self.k += 1;
    }

    pub fn step(&mut self, p: &Problem) -> Result<Step> {
        let sample = self.evaluate(p)?;
        if sample.norm <= ZERO_SUBGRADIENT_TOL {
            return Ok(Step::ExactOptimum(self.w.x.clone()));
        }
        self.accumulate(&sample);
        let dir = self.direction(&sample);
        self.advance(&dir);
        Ok(Step::Continued)
    }

    /// `x̂ / ŝ`, the weighted average of the iterates accumulated so far.
    pub fn averaged_iterate(&self) -> Result<Vec<f64>> {
        if self.s_hat <= 0.0 {
            return Err(Error::EmptyAverage);
        }
        Ok(scaled(1.0 / self.s_hat, &self.x_hat))
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Keep every n-th trace row (plus the last); 0 or 1 keeps all rows.
    pub trace_every: usize,
    /// Known optimal value, used to fill `f_gap_running`.
    pub f_star: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    /// `x̄_{K+1}`, or the exact optimum when `terminated_exactly`.
    pub x_bar: Vec<f64>,
    pub terminated_exactly: bool,
    pub iterations_used: usize,
    pub trace: Vec<TraceRow>,
    /// Largest `‖G(w_k)‖` observed.
    pub max_g_norm: f64,
    pub w0: PrimalDualPoint,
    pub constrained: bool,
    /// `ŝ_{K+1}`.
    pub s_hat: f64,
    /// True when the trace was thinned.
    pub thinned: bool,
}

pub fn run(p: &Problem, x0: &[f64], lambda0: f64, iterations: usize) -> Result<RunReport> {
    run_with(p, x0, lambda0, iterations, &RunOptions::default())
}

/// `iterations` loop passes, then the final average update with `G(w_K)`.
pub fn run_with(
    p: &Problem,
    x0: &[f64],
    lambda0: f64,
    iterations: usize,
    opts: &RunOptions,
) -> Result<RunReport> {
    let mut state = SolverState::init(p, x0, lambda0)?;
    let every = opts.trace_every.max(1);
    let mut trace = Vec::new();
    let mut max_g_norm: f64 = 0.0;

    for k in 0..=iterations {
        let sample = state.evaluate(p)?;
        max_g_norm = max_g_norm.max(sample.norm);
        let (f_x, fbar_x) = values_at(p, &state.w.x)?;

        if sample.norm <= ZERO_SUBGRADIENT_TOL {
            let x = state.w.x.clone();
            trace.push(TraceRow {
                k,
                x: x.clone(),
                lambda: state.w.lambda,
                f_x,
                fbar_x,
                g_norm: sample.norm,
                beta: state.beta,
                s_norm: norm(&state.s),
                direction: Vec::new(),
                x_bar_running: x.clone(),
                f_gap_running: opts.f_star.map(|fs| f_x - fs),
                fbar_at_xbar: fbar_x,
                negative_lambda: state.w.lambda < 0.0,
            });
            return Ok(RunReport {
                x_bar: x,
                terminated_exactly: true,
                iterations_used: k,
                trace,
                max_g_norm,
                w0: state.w0.clone(),
                constrained: state.constrained,
                s_hat: state.s_hat,
                thinned: every > 1,
            });
        }

        state.accumulate(&sample);
        let dir = state.direction(&sample);
        let keep = k % every == 0 || k == iterations;
        if keep {
            let x_bar = state.averaged_iterate()?;
            let (f_bar, fbar_bar) = values_at(p, &x_bar)?;
            let s_next: Vec<f64> = state.s.iter().zip(&dir).map(|(a, b)| a + b).collect();
            trace.push(TraceRow {
                k,
                x: state.w.x.clone(),
                lambda: state.w.lambda,
                f_x,
                fbar_x,
                g_norm: sample.norm,
                beta: state.beta,
                s_norm: norm(&s_next),
                direction: dir.clone(),
                x_bar_running: x_bar,
                f_gap_running: opts.f_star.map(|fs| f_bar - fs),
                fbar_at_xbar: fbar_bar,
                negative_lambda: state.w.lambda < 0.0,
            });
        }
        if k < iterations {
            state.advance(&dir);
        }
    }

    Ok(RunReport {
        x_bar: state.averaged_iterate()?,
        terminated_exactly: false,
        iterations_used: iterations,
        trace,
        max_g_norm,
        w0: state.w0.clone(),
        constrained: state.constrained,
        s_hat: state.s_hat,
        thinned: every > 1,
    })
}

/// `(f(x), f̄(x))` with `f̄ = 0` for unconstrained problems.
pub fn values_at(p: &Problem, x: &[f64]) -> Result<(f64, f64)> {
    let f = p.objective().eval(x)?;
    let fbar = if p.is_constrained() {
        penalty::violation(p, x)?
    } else {
        0.0
    };
    Ok((f, fbar))
}

/// `β_k` from the recursion `β_0 = 1`, `β_{k+1} = β_k + 1/β_k`.
pub fn beta_sequence(k_max: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(k_max + 1);
    let mut beta = 1.0;
    for _ in 0..=k_max {
        out.push(beta);
        beta += 1.0 / beta;
    }
    out
}

impl RunReport {
    /// `w_k` of a trace row in the stacked layout used by the iteration.
    pub fn stacked(&self, row: &TraceRow) -> Vec<f64> {
        let mut w = row.x.clone();
        if self.constrained {
            w.push(row.lambda);
        }
        w
    }

    pub fn stacked_w0(&self) -> Vec<f64> {
        let mut w = self.w0.x.clone();
        if self.constrained {
            w.push(self.w0.lambda);
        }
        w
    }

    /// Averaging weights `1/(ŝ‖G(w_k)‖)` over the full trace.
    pub fn weights(&self) -> Vec<f64> {
        self.trace
            .iter()
            .filter(|r| r.g_norm > ZERO_SUBGRADIENT_TOL)
            .map(|r| 1.0 / (self.s_hat * r.g_norm))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{Affine, ConvexExpr};

    fn p1() -> Problem {
        Problem::new(
            1,
            ConvexExpr::affine(vec![1.0], 0.0),
            vec![ConvexExpr::affine(vec![-1.0], 0.0)],
            vec![],
        )
        .unwrap()
    }

    fn p4() -> Problem {
        Problem::new(
            2,
            ConvexExpr::quadratic(vec![vec![2.0, 0.0], vec![0.0, 2.0]], vec![0.0, 0.0], 0.0),
            vec![],
            vec![Affine::new(vec![1.0, 1.0], -1.0)],
        )
        .unwrap()
    }

    fn pinned() -> Problem {
        // min x^2 s.t. x = 0
        Problem::new(
            1,
            ConvexExpr::quadratic(vec![vec![2.0]], vec![0.0], 0.0),
            vec![],
            vec![Affine::new(vec![1.0], 0.0)],
        )
        .unwrap()
    }

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn init_examples() {
        let st = SolverState::init(&p1(), &[1.0], 0.0).unwrap();
        assert_eq!(st.w(), &PrimalDualPoint::new(vec![1.0], 0.0));
        assert_eq!(st.s(), &[0.0, 0.0]);
        assert_eq!((st.beta(), st.s_hat(), st.k()), (1.0, 0.0, 0));
        assert_eq!(st.x_hat(), &[0.0]);
        assert_eq!(
            SolverState::init(&p1(), &[1.0], -1.0),
            Err(Error::NegativeMultiplier(-1.0))
        );
        let st = SolverState::init(&p4(), &[0.0, 0.0], 0.0).unwrap();
        assert_eq!(st.w(), &PrimalDualPoint::new(vec![0.0, 0.0], 0.0));
        assert!(SolverState::init(&p4(), &[0.0], 0.0).is_err());
    }

    #[test]
    fn first_two_steps_on_equality_problem() {
        let p = p4();
        let mut st = SolverState::init(&p, &[0.0, 0.0], 0.0).unwrap();
        assert_eq!(st.step(&p).unwrap(), Step::Continued);
        assert_eq!(st.s(), &[0.0, 0.0, -1.0]);
        assert_eq!(st.w(), &PrimalDualPoint::new(vec![0.0, 0.0], 1.0));
        assert_eq!(st.beta(), 2.0);

        assert_eq!(st.step(&p).unwrap(), Step::Continued);
        let r3 = 3f64.sqrt();
        assert!(close(
            st.s(),
            &[-1.0 / r3, -1.0 / r3, -1.0 - 1.0 / r3],
            1e-15
        ));
        let expect = [1.0 / (2.0 * r3), 1.0 / (2.0 * r3), (1.0 + 1.0 / r3) / 2.0];
        assert!(close(&st.w().stacked(), &expect, 1e-15));
        assert_eq!(st.beta(), 2.5);
        assert_eq!(st.k(), 2);
        assert!((st.s_hat() - (1.0 + 1.0 / r3)).abs() < 1e-15);
    }

    #[test]
    fn zero_subgradient_exits() {
        let p = pinned();
        let mut st = SolverState::init(&p, &[0.0], 0.0).unwrap();
        assert_eq!(st.step(&p).unwrap(), Step::ExactOptimum(vec![0.0]));
        let rep = run(&p, &[0.0], 0.0, 5).unwrap();
        assert!(rep.terminated_exactly);
        assert_eq!(rep.x_bar, vec![0.0]);
        assert_eq!(rep.iterations_used, 0);
    }

    #[test]
    fn zero_iterations_returns_start() {
        let rep = run(&p1(), &[0.3], 0.0, 0).unwrap();
        assert_eq!(rep.x_bar, vec![0.3]);
        assert_eq!(rep.trace.len(), 1);
        assert!(!rep.terminated_exactly);
    }

    #[test]
    fn averaged_iterate_examples() {
        let mut st = SolverState::init(&p1(), &[1.0], 0.0).unwrap();
        assert_eq!(st.averaged_iterate(), Err(Error::EmptyAverage));
        st.accumulate(&SubgradientSample::new(vec![1.0], -1.0));
        assert!(close(&st.averaged_iterate().unwrap(), &[1.0], 1e-15));

        let mut st = SolverState::init(&p1(), &[0.0], 0.0).unwrap();
        st.accumulate(&SubgradientSample::new(vec![1.0], 0.0));
        st.w.x = vec![1.0];
        st.accumulate(&SubgradientSample::new(vec![0.0], 2.0));
        assert!(close(&st.averaged_iterate().unwrap(), &[1.0 / 3.0], 1e-15));
    }

    #[test]
    fn equality_problem_converges() {
        let rep = run(&p4(), &[0.0, 0.0], 0.0, 10_000).unwrap();
        let err = crate::vector::dist(&rep.x_bar, &[0.5, 0.5]);
        assert!(err <= 0.05, "{err}");
        assert!(penalty::violation(&p4(), &rep.x_bar).unwrap().abs() <= 0.05);
        assert_eq!(rep.trace.len(), 10_001);
    }

    #[test]
    fn weights_form_convex_combination() {
        let rep = run(&p4(), &[0.0, 0.0], 0.0, 500).unwrap();
        let w = rep.weights();
        assert_eq!(w.len(), 501);
        assert!(w.iter().all(|&v| v > 0.0));
        assert!((w.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        let mut avg = vec![0.0; 2];
        for (row, wk) in rep.trace.iter().zip(&w) {
            axpy(*wk, &row.x, &mut avg);
        }
        assert!(close(&avg, &rep.x_bar, 1e-12));
    }

    #[test]
    fn unit_directions_and_s_growth() {
        let rep = run(&p1(), &[0.0], 0.0, 2000).unwrap();
        for row in &rep.trace {
            assert!((norm(&row.direction) - 1.0).abs() <= 1e-12);
            assert!(row.s_norm <= (row.k + 1) as f64 + 1e-12);
        }
    }

    #[test]
    fn beta_matches_recursion() {
        let rep = run(&p1(), &[0.0], 0.0, 1000).unwrap();
        let betas = beta_sequence(1000);
        for row in &rep.trace {
            assert!((row.beta - betas[row.k]).abs() <= 1e-12);
        }
    }

    #[test]
    fn lambda_identity_holds() {
        // λ_k = λ_0 + (Σ_{j<k} f̄(x_j)/‖G_j‖)/β_{k−1}
        for (p, x0) in [(p1(), vec![1.0]), (p4(), vec![0.0, 0.0])] {
            let rep = run(&p, &x0, 0.25, 3000).unwrap();
            let mut acc = 0.0;
            for pair in rep.trace.windows(2) {
                acc += pair[0].fbar_x / pair[0].g_norm;
                let expect = 0.25 + acc / pair[0].beta;
                assert!((pair[1].lambda - expect).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn trace_thinning_keeps_last_row() {
        let opts = RunOptions {
            trace_every: 100,
            f_star: Some(0.0),
        };
        let rep = run_with(&p1(), &[0.0], 0.0, 1050, &opts).unwrap();
        let ks: Vec<usize> = rep.trace.iter().map(|r| r.k).collect();
        assert_eq!(ks.first(), Some(&0));
        assert_eq!(ks.last(), Some(&1050));
        assert_eq!(ks.len(), 12);
        assert!(rep.thinned);
        let full = run(&p1(), &[0.0], 0.0, 1050).unwrap();
        assert_eq!(full.x_bar, rep.x_bar);
    }

    #[test]
    fn unconstrained_runs_on_x_alone() {
        let p = Problem::new(
            1,
            ConvexExpr::max(vec![
                ConvexExpr::quadratic(vec![vec![2.0]], vec![0.0], 0.0),
                ConvexExpr::quadratic(vec![vec![2.0]], vec![-4.0], 4.0),
            ]),
            vec![],
            vec![],
        )
        .unwrap();
        let st = SolverState::init(&p, &[0.0], 0.0).unwrap();
        assert_eq!(st.s().len(), 1);
        let rep = run(&p, &[0.0], 0.0, 10_000).unwrap();
        assert!((rep.x_bar[0] - 1.0).abs() < 0.01);
        assert!(rep.trace.iter().all(|r| r.lambda == 0.0 && r.fbar_x == 0.0));
    }
}
