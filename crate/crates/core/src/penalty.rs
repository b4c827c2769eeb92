//! Exact penalty reformulation of a constrained problem.
//!
//! With `f̄(x) = max(f_1(x), …, f_n(x), |h_1(x)|, …, |h_p(x)|)` the problem becomes
//! the saddle problem `min_x max_{λ≥0} F(x, λ) = f(x) + λ f̄(x)`. This module evaluates
//! `f̄`, `F` and the combined subgradient `G(x, λ) = [g(x) + λ ḡ(x); f̄(x)]`.

use crate::error::{Error, Result};
use crate::expr::ConvexExpr;
use crate::problem::Problem;
use crate::vector::{axpy, dot};

/// The stacked point `w = [x; λ]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PrimalDualPoint {
    pub x: Vec<f64>,
    /// Not clamped: λ can go negative when `f̄ < 0` along the way.
    pub lambda: f64,
}

impl PrimalDualPoint {
    pub fn new(x: Vec<f64>, lambda: f64) -> Self {
        PrimalDualPoint { x, lambda }
    }

    /// `[x; λ]` as one vector.
    pub fn stacked(&self) -> Vec<f64> {
        let mut w = self.x.clone();
        w.push(self.lambda);
        w
    }
}

/// One evaluation of `G(w)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SubgradientSample {
    /// Element of `∂ₓF(x, λ) = ∂f(x) + λ∂f̄(x)`.
    pub g_x: Vec<f64>,
    /// `∂F/∂λ = f̄(x)`.
    pub g_lambda: f64,
    /// `‖[g_x; g_lambda]‖₂`.
    pub norm: f64,
}

impl SubgradientSample {
    pub fn new(g_x: Vec<f64>, g_lambda: f64) -> Self {
        let norm = (dot(&g_x, &g_x) + g_lambda * g_lambda).sqrt();
        SubgradientSample {
            g_x,
            g_lambda,
            norm,
        }
    }
}

fn require_constraints(p: &Problem) -> Result<()> {
    if p.is_constrained() {
        Ok(())
    } else {
        Err(Error::Unconstrained)
    }
}

/// Index of the first attaining term in the order `f_1..f_n, |h_1|..|h_p|`, and `f̄(x)`.
fn attaining_term(p: &Problem, x: &[f64]) -> Result<(usize, f64)> {
    require_constraints(p)?;
    if x.len() != p.dim() {
        return Err(Error::DimensionMismatch {
            expected: p.dim(),
            got: x.len(),
        });
    }
    let mut best: Option<(usize, f64)> = None;
    let ineq = p.inequalities().iter().map(|f| f.eval(x));
    let eq = p.equalities().iter().map(|h| h.eval(x).map(f64::abs));
    for (i, v) in ineq.chain(eq).enumerate() {
        let v = v?;
        match best {
            Some((_, bv)) if v <= bv => {}
            _ => best = Some((i, v)),
        }
    }
    Ok(best.expect("at least one constraint"))
}

/// `f̄(x)`, the largest constraint violation.
pub fn violation(p: &Problem, x: &[f64]) -> Result<f64> {
    attaining_term(p, x).map(|(_, v)| v)
}

/// `ḡ(x) ∈ ∂f̄(x)`: the subgradient of the lowest-index attaining term.
pub fn violation_subgradient(p: &Problem, x: &[f64]) -> Result<Vec<f64>> {
    let (i, _) = attaining_term(p, x)?;
    let n = p.inequalities().len();
    if i < n {
        p.inequalities()[i].subgradient(x)
    } else {
        let h = &p.equalities()[i - n];
        ConvexExpr::Abs(h.clone()).subgradient(x)
    }
}

/// `G(w)`, computed as written even when `λ < 0`.
pub fn subgradient_sample(p: &Problem, w: &PrimalDualPoint) -> Result<SubgradientSample> {
    let mut g_x = p.objective().subgradient(&w.x)?;
    let (i, fbar) = attaining_term(p, &w.x)?;
    let n = p.inequalities().len();
    let gbar = if i < n {
        p.inequalities()[i].subgradient(&w.x)?
    } else {
        ConvexExpr::Abs(p.equalities()[i - n].clone()).subgradient(&w.x)?
    };
    axpy(w.lambda, &gbar, &mut g_x);
    Ok(SubgradientSample::new(g_x, fbar))
}

/// `F(x, λ) = f(x) + λ f̄(x)`.
pub fn penalty_value(p: &Problem, w: &PrimalDualPoint) -> Result<f64> {
    Ok(p.objective().eval(&w.x)? + w.lambda * violation(p, &w.x)?)
}
