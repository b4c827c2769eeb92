//! Built-in problems with hand-derived optimality certificates.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::expr::{Affine, ConvexExpr, FnOracle};
use crate::problem::Problem;

/// Known primal-dual optimum of a problem.
#[derive(Debug, Clone, PartialEq)]
pub struct Certificate {
    pub x_star: Vec<f64>,
    /// One multiplier per inequality, nonnegative.
    pub mu_star: Vec<f64>,
    /// One multiplier per equality.
    pub theta_star: Vec<f64>,
    /// `Σμ* + Σ|θ*|`.
    pub lambda_star: f64,
    pub f_star: f64,
}

impl Certificate {
    /// Builds a certificate with `lambda_star` set to `Σμ* + Σ|θ*|`.
    pub fn new(x_star: Vec<f64>, mu_star: Vec<f64>, theta_star: Vec<f64>, f_star: f64) -> Self {
        let lambda_star =
            mu_star.iter().sum::<f64>() + theta_star.iter().map(|t| t.abs()).sum::<f64>();
        Certificate {
            x_star,
            mu_star,
            theta_star,
            lambda_star,
            f_star,
        }
    }

    /// Multipliers scaled by `factor`, keeping `lambda_star`. Negative control for
    /// certificate checking.
    pub fn perturbed(&self, factor: f64) -> Self {
        Certificate {
            mu_star: self.mu_star.iter().map(|m| m * factor).collect(),
            theta_star: self.theta_star.iter().map(|t| t * factor).collect(),
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone)]
pub struct ZooEntry {
    pub name: &'static str,
    pub summary: &'static str,
    pub problem: Problem,
    pub certificate: Certificate,
}

impl ZooEntry {
    /// False for entries that use a callable oracle.
    pub fn is_serializable(&self) -> bool {
        self.problem.is_verified()
    }
}

pub const NAMES: [&str; 6] = [
    "halfline-linear",
    "shifted-quad",
    "quartic-nonlipschitz",
    "equality-quad",
    "max-quad",
    "tiny-svm",
];

pub fn get_problem(name: &str) -> Result<(Problem, Certificate)> {
    let entry = entry(name)?;
    Ok((entry.problem, entry.certificate))
}

pub fn entry(name: &str) -> Result<ZooEntry> {
    let (summary, problem, certificate) = match name {
        "halfline-linear" => (
            "min x s.t. -x <= 0",
            Problem::new(
                1,
                ConvexExpr::affine(vec![1.0], 0.0),
                vec![ConvexExpr::affine(vec![-1.0], 0.0)],
                vec![],
            )?,
            Certificate::new(vec![0.0], vec![1.0], vec![], 0.0),
        ),
        "shifted-quad" => (
            "min (x-2)^2 s.t. x - 1 <= 0",
            Problem::new(
                1,
                ConvexExpr::quadratic(vec![vec![2.0]], vec![-4.0], 4.0),
                vec![ConvexExpr::affine(vec![1.0], -1.0)],
                vec![],
            )?,
            Certificate::new(vec![1.0], vec![2.0], vec![], 1.0),
        ),
        "quartic-nonlipschitz" => (
            "min x^4 s.t. 1 - x <= 0 (objective via callable oracle)",
            Problem::new(
                1,
                ConvexExpr::oracle(Arc::new(FnOracle {
                    label: "x^4".into(),
                    dim: 1,
                    value: |x| x[0].powi(4),
                    subgradient: |x| vec![4.0 * x[0].powi(3)],
                })),
                vec![ConvexExpr::affine(vec![-1.0], 1.0)],
                vec![],
            )?,
            Certificate::new(vec![1.0], vec![4.0], vec![], 1.0),
        ),
        "equality-quad" => (
            "min x^2 + y^2 s.t. x + y - 1 = 0",
            Problem::new(
                2,
                ConvexExpr::quadratic(vec![vec![2.0, 0.0], vec![0.0, 2.0]], vec![0.0, 0.0], 0.0),
                vec![],
                vec![Affine::new(vec![1.0, 1.0], -1.0)],
            )?,
            Certificate::new(vec![0.5, 0.5], vec![], vec![-1.0], 0.5),
        ),
        "max-quad" => (
            "min max(x^2, (x-2)^2)",
            Problem::new(
                1,
                ConvexExpr::max(vec![
                    ConvexExpr::quadratic(vec![vec![2.0]], vec![0.0], 0.0),
                    ConvexExpr::quadratic(vec![vec![2.0]], vec![-4.0], 4.0),
                ]),
                vec![],
                vec![],
            )?,
            Certificate::new(vec![1.0], vec![], vec![], 1.0),
        ),
        "tiny-svm" => (
            "soft-margin SVM on four points, variables (v1, v2, b)",
            Problem::new(3, svm_objective(), vec![], vec![])?,
            // v* = Σ y_i z_i with every hinge strictly active; b* = 0 (any |b| < 0.5 is optimal).
            Certificate::new(vec![1.0, 1.0, 0.0], vec![], vec![], 3.0),
        ),
        _ => {
            return Err(Error::UnknownProblem {
                name: name.to_string(),
                available: NAMES.iter().map(|s| s.to_string()).collect(),
            })
        }
    };
    Ok(ZooEntry {
        name: NAMES.iter().find(|n| **n == name).expect("registered"),
        summary,
        problem,
        certificate,
    })
}

/// Labelled points `(z, y)` of the SVM instance.
pub const SVM_POINTS: [([f64; 2], f64); 4] = [
    ([0.5, 0.0], 1.0),
    ([0.0, 0.5], 1.0),
    ([-0.5, 0.0], -1.0),
    ([0.0, -0.5], -1.0),
];

/// `½‖v‖² + Σ max(0, 1 − y_i(vᵀz_i + b))` over `(v1, v2, b)`.
fn svm_objective() -> ConvexExpr {
    let mut terms = vec![ConvexExpr::quadratic(
        vec![
            vec![1.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 0.0],
        ],
        vec![0.0; 3],
        0.0,
    )];
    for (z, y) in SVM_POINTS {
        terms.push(ConvexExpr::max(vec![
            ConvexExpr::affine(vec![0.0; 3], 0.0),
            ConvexExpr::affine(vec![-y * z[0], -y * z[1], -y], 1.0),
        ]));
    }
    ConvexExpr::sum(terms)
}

pub fn all() -> Vec<ZooEntry> {
    NAMES
        .iter()
        .map(|n| entry(n).expect("registered"))
        .collect()
}
