//! Weighted dual averaging for constrained convex minimization
//!
//! ```text
//! min f(x)  s.t.  f_i(x) ≤ 0 (i = 1..n),  h_j(x) = 0 (j = 1..p)
//! ```
//!
//! with `f`, `f_i` convex but neither differentiable nor Lipschitz, and `h_j` affine.
//! The constraints are folded into the exact penalty `F(x, λ) = f(x) + λ f̄(x)` and a
//! parameter-free dual averaging scheme is run on `w = [x; λ]`.
//!
//! * [`expr`]: convex expression trees with deterministic subgradients
//! * [`problem`]: problem type and its text format
//! * [`penalty`]: `f̄`, `F` and the combined subgradient `G`
//! * [`solver`]: the iteration itself
//! * [`diagnostics`]: monitors for the convergence bounds
//! * [`zoo`]: certified test problems
//! * [`baseline`]: projected subgradient method for comparison

pub mod baseline;
pub mod diagnostics;
pub mod error;
pub mod expr;
pub mod penalty;
pub mod problem;
pub mod solver;
pub mod vector;
pub mod zoo;

pub use error::{Error, Result};
pub use expr::{Affine, ConvexExpr, ConvexOracle, FnOracle};
pub use penalty::{PrimalDualPoint, SubgradientSample};
pub use problem::{parse_problem, serialize_problem, Problem};
pub use solver::{run, run_with, RunOptions, RunReport, SolverState, Step};
pub use zoo::{get_problem, Certificate};
