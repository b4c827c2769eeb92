//! Projected subgradient method, kept as a reference point for comparisons.
//!
//! Fixed step `1/√(k+1)`, output is the plain average of `x_0, …, x_K`.

use crate::error::{Error, Result};
use crate::expr::ConvexExpr;
use crate::vector::{axpy, dot};

/// Sets with a closed-form Euclidean projection.
#[derive(Debug, Clone, PartialEq)]
pub enum ProjectableSet {
    /// `aᵀx ≤ b`
    Halfspace {
        a: Vec<f64>,
        b: f64,
    },
    Box {
        lower: Vec<f64>,
        upper: Vec<f64>,
    },
    /// `aᵀx = b`
    Hyperplane {
        a: Vec<f64>,
        b: f64,
    },
}

impl ProjectableSet {
    pub fn dim(&self) -> usize {
        match self {
            ProjectableSet::Halfspace { a, .. } | ProjectableSet::Hyperplane { a, .. } => a.len(),
            ProjectableSet::Box { lower, .. } => lower.len(),
        }
    }

    pub fn project(&self, x: &[f64]) -> Vec<f64> {
        let mut out = x.to_vec();
        match self {
            ProjectableSet::Halfspace { a, b } => {
                let excess = dot(a, x) - b;
                if excess > 0.0 {
                    axpy(-excess / dot(a, a), a, &mut out);
                }
            }
            ProjectableSet::Hyperplane { a, b } => {
                let excess = dot(a, x) - b;
                axpy(-excess / dot(a, a), a, &mut out);
            }
            ProjectableSet::Box { lower, upper } => {
                for ((v, lo), hi) in out.iter_mut().zip(lower).zip(upper) {
                    *v = v.clamp(*lo, *hi);
                }
            }
        }
        out
    }

    /// Largest constraint violation at `x` (0 inside the set).
    pub fn violation(&self, x: &[f64]) -> f64 {
        match self {
            ProjectableSet::Halfspace { a, b } => (dot(a, x) - b).max(0.0),
            ProjectableSet::Hyperplane { a, b } => (dot(a, x) - b).abs(),
            ProjectableSet::Box { lower, upper } => x
                .iter()
                .zip(lower.iter().zip(upper))
                .map(|(v, (lo, hi))| (lo - v).max(v - hi).max(0.0))
                .fold(0.0, f64::max),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaselineReport {
    pub x_bar: Vec<f64>,
    /// `f(x_k)` for `k = 0..=K`.
    pub objective_trace: Vec<f64>,
    /// Largest set violation over all iterates.
    pub max_violation: f64,
}

/// Feasibility slack accepted for the starting point.
pub const FEASIBILITY_TOL: f64 = 1e-12;

pub fn projected_subgradient(
    objective: &ConvexExpr,
    set: &ProjectableSet,
    x0: &[f64],
    iterations: usize,
) -> Result<BaselineReport> {
    if x0.len() != set.dim() {
        return Err(Error::DimensionMismatch {
            expected: set.dim(),
            got: x0.len(),
        });
    }
    if set.violation(x0) > FEASIBILITY_TOL {
        return Err(Error::InvalidArgument(
            "baseline start point is not feasible".into(),
        ));
    }
    let mut x = x0.to_vec();
    let mut sum = vec![0.0; x.len()];
    let mut objective_trace = Vec::with_capacity(iterations + 1);
    let mut max_violation: f64 = 0.0;
    for k in 0..=iterations {
        objective_trace.push(objective.eval(&x)?);
        max_violation = max_violation.max(set.violation(&x));
        axpy(1.0, &x, &mut sum);
        if k == iterations {
            break;
        }
        let g = objective.subgradient(&x)?;
        let step = 1.0 / ((k + 1) as f64).sqrt();
        axpy(-step, &g, &mut x);
        x = set.project(&x);
    }
    let n = (iterations + 1) as f64;
    Ok(BaselineReport {
        x_bar: sum.into_iter().map(|v| v / n).collect(),
        objective_trace,
        max_violation,
    })
}

/// A zoo problem recast as `min f(x)` over a projectable set, with a common
/// feasible start for both methods.
#[derive(Debug, Clone)]
pub struct ComparisonCase {
    pub name: &'static str,
    pub set: ProjectableSet,
    pub start: Vec<f64>,
}

/// Comparison form of a constrained zoo problem.
pub fn comparison_case(name: &str) -> Result<ComparisonCase> {
    let entry = crate::zoo::entry(name)?;
    let (set, start) = match entry.name {
        "halfline-linear" => (
            ProjectableSet::Halfspace {
                a: vec![-1.0],
                b: 0.0,
            },
            vec![0.0],
        ),
        "shifted-quad" => (
            ProjectableSet::Halfspace {
                a: vec![1.0],
                b: 1.0,
            },
            vec![0.0],
        ),
        "quartic-nonlipschitz" => (
            ProjectableSet::Halfspace {
                a: vec![-1.0],
                b: -1.0,
            },
            vec![2.0],
        ),
        // x0 = 0 is infeasible and projects onto the optimum itself.
        "equality-quad" => (
            ProjectableSet::Hyperplane {
                a: vec![1.0, 1.0],
                b: 1.0,
            },
            vec![1.0, 0.0],
        ),
        other => {
            return Err(Error::InvalidArgument(format!(
                "baseline unavailable for `{other}`: no projectable feasible set"
            )))
        }
    };
    Ok(ComparisonCase {
        name: entry.name,
        set,
        start,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn projections() {
        let h = ProjectableSet::Halfspace {
            a: vec![1.0],
            b: 1.0,
        };
        assert_eq!(h.project(&[3.0]), vec![1.0]);
        assert_eq!(h.project(&[-3.0]), vec![-3.0]);
        let bx = ProjectableSet::Box {
            lower: vec![0.0, 0.0],
            upper: vec![1.0, 1.0],
        };
        assert_eq!(bx.project(&[-1.0, 2.0]), vec![0.0, 1.0]);
        let hp = ProjectableSet::Hyperplane {
            a: vec![1.0, 1.0],
            b: 1.0,
        };
        assert_eq!(hp.project(&[0.0, 0.0]), vec![0.5, 0.5]);
    }

    #[test]
    fn shifted_quad_over_halfline() {
        let f = ConvexExpr::quadratic(vec![vec![2.0]], vec![-4.0], 4.0);
        let set = ProjectableSet::Halfspace {
            a: vec![1.0],
            b: 1.0,
        };
        let rep = projected_subgradient(&f, &set, &[0.0], 10_000).unwrap();
        assert!((rep.x_bar[0] - 1.0).abs() <= 0.05);
        assert!(rep.max_violation <= 1e-12);
        assert_eq!(rep.objective_trace.len(), 10_001);
    }

    #[test]
    fn degenerate_runs() {
        let f = ConvexExpr::quadratic(vec![vec![2.0]], vec![-4.0], 4.0);
        let set = ProjectableSet::Halfspace {
            a: vec![1.0],
            b: 1.0,
        };
        assert_eq!(
            projected_subgradient(&f, &set, &[0.25], 0).unwrap().x_bar,
            vec![0.25]
        );
        let c = ConvexExpr::affine(vec![0.0], 7.0);
        assert_eq!(
            projected_subgradient(&c, &set, &[0.25], 50).unwrap().x_bar,
            vec![0.25]
        );
        assert!(projected_subgradient(&f, &set, &[2.0], 5).is_err());
    }

    #[test]
    fn comparison_cases_match_zoo_constraints() {
        for name in [
            "halfline-linear",
            "shifted-quad",
            "quartic-nonlipschitz",
            "equality-quad",
        ] {
            let case = comparison_case(name).unwrap();
            let (p, c) = crate::zoo::get_problem(name).unwrap();
            assert!(case.set.violation(&case.start) <= FEASIBILITY_TOL);
            assert!(case.set.violation(&c.x_star) <= FEASIBILITY_TOL);
            // same feasible set: zero violation exactly where the zoo penalty is <= 0
            for x in [-2.0, -0.5, 0.0, 0.5, 1.0, 1.5, 3.0] {
                let pt = vec![x; p.dim()];
                let fbar = crate::penalty::violation(&p, &pt).unwrap();
                assert_eq!(case.set.violation(&pt) == 0.0, fbar <= 0.0, "{name} at {x}");
            }
        }
        assert!(matches!(
            comparison_case("max-quad"),
            Err(Error::InvalidArgument(_))
        ));
        assert!(matches!(
            comparison_case("nope"),
            Err(Error::UnknownProblem { .. })
        ));
    }

    #[test]
    fn iterates_stay_on_hyperplane() {
        let f = ConvexExpr::quadratic(vec![vec![2.0, 0.0], vec![0.0, 2.0]], vec![0.0, 0.0], 0.0);
        let set = ProjectableSet::Hyperplane {
            a: vec![1.0, 1.0],
            b: 1.0,
        };
        let rep = projected_subgradient(&f, &set, &[1.0, 0.0], 1000).unwrap();
        assert!(rep.max_violation <= 1e-12);
    }
}
