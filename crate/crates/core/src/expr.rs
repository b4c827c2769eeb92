//! Expression trees for convex functions.
//!
//! A [`ConvexExpr`] is built from affine and convex quadratic leaves combined with
//! nonnegative scaling, sums, pointwise maxima and absolute values of affine maps.
//! Every node can be evaluated exactly and yields one deterministic subgradient:
//!
//! * `Max` picks the lowest-index child attaining the maximum;
//! * `Abs` returns the zero vector at its kink (`aᵀx + b = 0` exactly).
//!
//! Functions outside the grammar can be plugged in through [`ConvexOracle`]; such
//! nodes are accepted as-is and their convexity is reported as unverified.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::vector::{axpy, dot};

/// Symmetry tolerance for quadratic forms.
pub const SYMMETRY_TOL: f64 = 1e-12;
/// Smallest pivot accepted by the positive-semidefinite test.
pub const PSD_PIVOT_TOL: f64 = -1e-10;

/// `aᵀx + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct Affine {
    pub a: Vec<f64>,
    pub b: f64,
}

impl Affine {
    pub fn new(a: Vec<f64>, b: f64) -> Self {
        Affine { a, b }
    }

    pub fn dim(&self) -> usize {
        self.a.len()
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.a.len(), x)?;
        Ok(dot(&self.a, x) + self.b)
    }
}

/// User-supplied value/subgradient pair for a convex function the grammar cannot express.
///
/// Nothing about convexity is checked for oracle nodes.
pub trait ConvexOracle: Send + Sync + fmt::Debug {
    fn dim(&self) -> usize;
    fn label(&self) -> &str;
    fn value(&self, x: &[f64]) -> f64;
    fn subgradient(&self, x: &[f64]) -> Vec<f64>;
}

/// A [`ConvexOracle`] backed by two plain function pointers.
#[derive(Debug, Clone)]
pub struct FnOracle {
    pub label: String,
    pub dim: usize,
    pub value: fn(&[f64]) -> f64,
    pub subgradient: fn(&[f64]) -> Vec<f64>,
}

impl ConvexOracle for FnOracle {
    fn dim(&self) -> usize {
        self.dim
    }
    fn label(&self) -> &str {
        &self.label
    }
    fn value(&self, x: &[f64]) -> f64 {
        (self.value)(x)
    }
    fn subgradient(&self, x: &[f64]) -> Vec<f64> {
        (self.subgradient)(x)
    }
}

#[derive(Debug, Clone)]
pub enum ConvexExpr {
    Affine(Affine),
    /// `½xᵀQx + aᵀx + b` with `Q` symmetric positive semidefinite.
    Quadratic {
        q: Vec<Vec<f64>>,
        a: Vec<f64>,
        b: f64,
    },
    Sum(Vec<ConvexExpr>),
    Scale {
        c: f64,
        child: Box<ConvexExpr>,
    },
    Max(Vec<ConvexExpr>),
    /// `|aᵀx + b|`; the child is affine by construction.
    Abs(Affine),
    Oracle(Arc<dyn ConvexOracle>),
}

impl PartialEq for ConvexExpr {
    fn eq(&self, other: &Self) -> bool {
        use ConvexExpr::*;
        match (self, other) {
            (Affine(x), Affine(y)) | (Abs(x), Abs(y)) => x == y,
            (
                Quadratic { q, a, b },
                Quadratic {
                    q: q2,
                    a: a2,
                    b: b2,
                },
            ) => q == q2 && a == a2 && b == b2,
            (Sum(x), Sum(y)) | (Max(x), Max(y)) => x == y,
            (Scale { c, child }, Scale { c: c2, child: ch2 }) => c == c2 && child == ch2,
            (Oracle(x), Oracle(y)) => Arc::ptr_eq(x, y),
            _ => false,
        }
    }
}

fn check_dim(expected: usize, x: &[f64]) -> Result<()> {
    if x.len() != expected {
        return Err(Error::DimensionMismatch {
            expected,
            got: x.len(),
        });
    }
    Ok(())
}

impl ConvexExpr {
    pub fn affine(a: Vec<f64>, b: f64) -> Self {
        ConvexExpr::Affine(Affine::new(a, b))
    }

    pub fn quadratic(q: Vec<Vec<f64>>, a: Vec<f64>, b: f64) -> Self {
        ConvexExpr::Quadratic { q, a, b }
    }

    pub fn sum(children: Vec<ConvexExpr>) -> Self {
        ConvexExpr::Sum(children)
    }

    pub fn scale(c: f64, child: ConvexExpr) -> Self {
        ConvexExpr::Scale {
            c,
            child: Box::new(child),
        }
    }

    pub fn max(children: Vec<ConvexExpr>) -> Self {
        ConvexExpr::Max(children)
    }

    pub fn abs(a: Vec<f64>, b: f64) -> Self {
        ConvexExpr::Abs(Affine::new(a, b))
    }

    pub fn oracle(oracle: Arc<dyn ConvexOracle>) -> Self {
        ConvexExpr::Oracle(oracle)
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        match self {
            ConvexExpr::Affine(aff) => aff.eval(x),
            ConvexExpr::Quadratic { q, a, b } => {
                check_dim(a.len(), x)?;
                let mut quad = 0.0;
                for (row, xi) in q.iter().zip(x) {
                    quad += xi * dot(row, x);
                }
                Ok(0.5 * quad + dot(a, x) + b)
            }
            ConvexExpr::Sum(children) => {
                let mut total = 0.0;
                for child in children {
                    total += child.eval(x)?;
                }
                Ok(total)
            }
            ConvexExpr::Scale { c, child } => Ok(c * child.eval(x)?),
            ConvexExpr::Max(children) => {
                let (_, value) = self.max_argmax(children, x)?;
                Ok(value)
            }
            ConvexExpr::Abs(aff) => Ok(aff.eval(x)?.abs()),
            ConvexExpr::Oracle(o) => {
                check_dim(o.dim(), x)?;
                Ok(o.value(x))
            }
        }
    }

    /// Lowest index attaining the maximum, and the maximum itself.
    fn max_argmax(&self, children: &[ConvexExpr], x: &[f64]) -> Result<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        for (i, child) in children.iter().enumerate() {
            let v = child.eval(x)?;
            match best {
                Some((_, bv)) if v <= bv => {}
                _ => best = Some((i, v)),
            }
        }
        best.ok_or_else(|| Error::Validation {
            path: "max".into(),
            rule: "max of an empty list".into(),
        })
    }

    /// Index of the `Max` child whose subgradient [`ConvexExpr::subgradient`] returns.
    pub fn selected_child(&self, x: &[f64]) -> Result<Option<usize>> {
        match self {
            ConvexExpr::Max(children) => Ok(Some(self.max_argmax(children, x)?.0)),
            _ => Ok(None),
        }
    }

    pub fn subgradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut g = vec![0.0; x.len()];
        self.add_subgradient(1.0, x, &mut g)?;
        Ok(g)
    }

    /// `g += weight * subgradient(x)`
    fn add_subgradient(&self, weight: f64, x: &[f64], g: &mut [f64]) -> Result<()> {
        match self {
            ConvexExpr::Affine(aff) => {
                check_dim(aff.dim(), x)?;
                axpy(weight, &aff.a, g);
            }
            ConvexExpr::Quadratic { q, a, .. } => {
                check_dim(a.len(), x)?;
                for ((gi, row), ai) in g.iter_mut().zip(q).zip(a) {
                    *gi += weight * (dot(row, x) + ai);
                }
            }
            ConvexExpr::Sum(children) => {
                for child in children {
                    child.add_subgradient(weight, x, g)?;
                }
            }
            ConvexExpr::Scale { c, child } => {
                let cg: Vec<f64> = child.subgradient(x)?.into_iter().map(|v| c * v).collect();
                axpy(weight, &cg, g);
            }
            ConvexExpr::Max(children) => {
                let (i, _) = self.max_argmax(children, x)?;
                children[i].add_subgradient(weight, x, g)?;
            }
            ConvexExpr::Abs(aff) => {
                let v = aff.eval(x)?;
                if v != 0.0 {
                    axpy(weight * v.signum(), &aff.a, g);
                }
            }
            ConvexExpr::Oracle(o) => {
                check_dim(o.dim(), x)?;
                let og = o.subgradient(x);
                check_dim(x.len(), &og)?;
                axpy(weight, &og, g);
            }
        }
        Ok(())
    }

    /// Structural convexity check against dimension `d`, reporting the first violation.
    pub fn validate(&self, d: usize) -> Result<()> {
        self.validate_at(d, "expr")
    }

    pub(crate) fn validate_at(&self, d: usize, path: &str) -> Result<()> {
        let fail = |rule: String| {
            Err(Error::Validation {
                path: path.to_string(),
                rule,
            })
        };
        match self {
            ConvexExpr::Affine(aff) | ConvexExpr::Abs(aff) => {
                if aff.a.len() != d {
                    return fail(format!(
                        "vector length {} does not match d = {d}",
                        aff.a.len()
                    ));
                }
                if !aff.a.iter().chain([&aff.b]).all(|v| v.is_finite()) {
                    return fail("non-finite coefficient".into());
                }
            }
            ConvexExpr::Quadratic { q, a, b } => {
                if a.len() != d {
                    return fail(format!("vector length {} does not match d = {d}", a.len()));
                }
                if q.len() != d || q.iter().any(|row| row.len() != d) {
                    return fail(format!("Q is not {d}x{d}"));
                }
                let finite = q
                    .iter()
                    .flatten()
                    .chain(a)
                    .chain([b])
                    .all(|v| v.is_finite());
                if !finite {
                    return fail("non-finite coefficient".into());
                }
                if !is_symmetric(q) {
                    return fail("Q is not symmetric".into());
                }
                if !is_psd(q) {
                    return fail("Q is not positive semidefinite".into());
                }
            }
            ConvexExpr::Sum(children) => {
                for (i, child) in children.iter().enumerate() {
                    child.validate_at(d, &format!("{path}.sum[{i}]"))?;
                }
            }
            ConvexExpr::Scale { c, child } => {
                if !c.is_finite() {
                    return fail("non-finite scale".into());
                }
                if *c < 0.0 {
                    return fail(format!("negative scale {c}"));
                }
                child.validate_at(d, &format!("{path}.scale"))?;
            }
            ConvexExpr::Max(children) => {
                if children.is_empty() {
                    return fail("max of an empty list".into());
                }
                for (i, child) in children.iter().enumerate() {
                    child.validate_at(d, &format!("{path}.max[{i}]"))?;
                }
            }
            ConvexExpr::Oracle(o) => {
                if o.dim() != d {
                    return fail(format!(
                        "oracle dimension {} does not match d = {d}",
                        o.dim()
                    ));
                }
            }
        }
        Ok(())
    }

    /// False when the tree contains an oracle node, whose convexity cannot be checked.
    pub fn is_verified(&self) -> bool {
        match self {
            ConvexExpr::Oracle(_) => false,
            ConvexExpr::Sum(cs) | ConvexExpr::Max(cs) => cs.iter().all(ConvexExpr::is_verified),
            ConvexExpr::Scale { child, .. } => child.is_verified(),
            _ => true,
        }
    }

    /// Points whose convex hull is a subset of the subdifferential at `x` that contains
    /// every subgradient reachable by the tree's rules; exact for the grammar
    /// nodes (oracles contribute their single subgradient).
    ///
    /// `Max` children within `tie_tol` of the maximum are all active, and `Abs` with
    /// `|aᵀx+b| ≤ tie_tol` contributes `{-a, a}`. Returns `None` if more than
    /// `limit` points would be generated.
    pub fn subdifferential_vertices(
        &self,
        x: &[f64],
        tie_tol: f64,
        limit: usize,
    ) -> Result<Option<Vec<Vec<f64>>>> {
        let pts = match self {
            ConvexExpr::Affine(_) | ConvexExpr::Quadratic { .. } | ConvexExpr::Oracle(_) => {
                vec![self.subgradient(x)?]
            }
            ConvexExpr::Abs(aff) => {
                let v = aff.eval(x)?;
                if v.abs() <= tie_tol {
                    vec![aff.a.iter().map(|c| -c).collect(), aff.a.clone()]
                } else {
                    vec![self.subgradient(x)?]
                }
            }
            ConvexExpr::Scale { c, child } => {
                match child.subdifferential_vertices(x, tie_tol, limit)? {
                    Some(pts) => pts
                        .into_iter()
                        .map(|p| p.into_iter().map(|v| c * v).collect())
                        .collect(),
                    None => return Ok(None),
                }
            }
            ConvexExpr::Sum(children) => {
                let mut acc = vec![vec![0.0; x.len()]];
                for child in children {
                    let Some(child_pts) = child.subdifferential_vertices(x, tie_tol, limit)? else {
                        return Ok(None);
                    };
                    if acc.len() * child_pts.len() > limit {
                        return Ok(None);
                    }
                    let mut next = Vec::with_capacity(acc.len() * child_pts.len());
                    for base in &acc {
                        for p in &child_pts {
                            next.push(base.iter().zip(p).map(|(u, v)| u + v).collect());
                        }
                    }
                    acc = dedup(next);
                }
                acc
            }
            ConvexExpr::Max(children) => {
                let values = children
                    .iter()
                    .map(|c| c.eval(x))
                    .collect::<Result<Vec<_>>>()?;
                let top = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let scale = top.abs().max(1.0);
                let mut acc = Vec::new();
                for (child, v) in children.iter().zip(&values) {
                    if top - v <= tie_tol * scale {
                        let Some(pts) = child.subdifferential_vertices(x, tie_tol, limit)? else {
                            return Ok(None);
                        };
                        acc.extend(pts);
                    }
                }
                dedup(acc)
            }
        };
        Ok((pts.len() <= limit).then_some(pts))
    }
}

fn dedup(points: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(points.len());
    for p in points {
        if !out.contains(&p) {
            out.push(p);
        }
    }
    out
}

fn is_symmetric(q: &[Vec<f64>]) -> bool {
    let n = q.len();
    (0..n).all(|i| {
        (0..i).all(|j| {
            let scale = q[i][j].abs().max(q[j][i].abs()).max(1.0);
            (q[i][j] - q[j][i]).abs() <= SYMMETRY_TOL * scale
        })
    })
}

/// Symmetrically pivoted Cholesky-style elimination; pivots down to
/// [`PSD_PIVOT_TOL`] are accepted as zero.
pub fn is_psd(q: &[Vec<f64>]) -> bool {
    let n = q.len();
    let mut m: Vec<Vec<f64>> = q.to_vec();
    let mut remaining: Vec<usize> = (0..n).collect();
    while !remaining.is_empty() {
        let (pos, &p) = remaining
            .iter()
            .enumerate()
            .max_by(|a, b| m[*a.1][*a.1].total_cmp(&m[*b.1][*b.1]))
            .expect("nonempty");
        let pivot = m[p][p];
        if pivot < PSD_PIVOT_TOL {
            return false;
        }
        if pivot <= -PSD_PIVOT_TOL {
            // Largest remaining diagonal is ~0: the rest must vanish for PSD.
            let bound = (-PSD_PIVOT_TOL).sqrt();
            return remaining
                .iter()
                .all(|&i| remaining.iter().all(|&j| i == j || m[i][j].abs() <= bound));
        }
        remaining.swap_remove(pos);
        for &i in &remaining {
            let f = m[i][p] / pivot;
            for &j in &remaining {
                m[i][j] -= f * m[p][j];
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sq() -> ConvexExpr {
        ConvexExpr::quadratic(vec![vec![2.0]], vec![0.0], 0.0)
    }

    fn shifted_sq() -> ConvexExpr {
        // (x-2)^2
        ConvexExpr::quadratic(vec![vec![2.0]], vec![-4.0], 4.0)
    }

    #[test]
    fn eval_examples() {
        assert_eq!(
            ConvexExpr::affine(vec![1.0], 0.0).eval(&[2.0]).unwrap(),
            2.0
        );
        assert_eq!(sq().eval(&[3.0]).unwrap(), 9.0);
        let m = ConvexExpr::max(vec![sq(), shifted_sq()]);
        assert_eq!(m.eval(&[0.0]).unwrap(), 4.0);
    }

    #[test]
    fn subgradient_examples() {
        assert_eq!(
            ConvexExpr::abs(vec![1.0], 0.0).subgradient(&[0.0]).unwrap(),
            vec![0.0]
        );
        let m = ConvexExpr::max(vec![sq(), shifted_sq()]);
        assert_eq!(m.subgradient(&[1.0]).unwrap(), vec![2.0]);
        assert_eq!(m.selected_child(&[1.0]).unwrap(), Some(0));
        assert_eq!(sq().subgradient(&[3.0]).unwrap(), vec![6.0]);
    }

    #[test]
    fn abs_sign_away_from_kink() {
        let e = ConvexExpr::abs(vec![2.0, -1.0], 1.0);
        assert_eq!(e.subgradient(&[-1.0, 0.0]).unwrap(), vec![-2.0, 1.0]);
        assert_eq!(e.subgradient(&[1.0, 0.0]).unwrap(), vec![2.0, -1.0]);
    }

    #[test]
    fn dimension_mismatch() {
        let e = ConvexExpr::affine(vec![1.0, 2.0], 0.0);
        assert_eq!(
            e.eval(&[1.0]),
            Err(Error::DimensionMismatch {
                expected: 2,
                got: 1
            })
        );
        assert!(e.subgradient(&[1.0, 2.0, 3.0]).is_err());
    }

    #[test]
    fn validate_examples() {
        let neg = ConvexExpr::quadratic(vec![vec![-1.0]], vec![0.0], 0.0);
        match neg.validate(1) {
            Err(Error::Validation { rule, .. }) => assert!(rule.contains("semidefinite")),
            other => panic!("{other:?}"),
        }
        let s = ConvexExpr::scale(-0.5, sq());
        match s.validate(1) {
            Err(Error::Validation { rule, path }) => {
                assert!(rule.contains("negative scale"));
                assert_eq!(path, "expr");
            }
            other => panic!("{other:?}"),
        }
        let iso = ConvexExpr::quadratic(vec![vec![2.0, 0.0], vec![0.0, 2.0]], vec![0.0, 0.0], 0.0);
        assert!(iso.validate(2).is_ok());
    }

    #[test]
    fn validate_reports_subtree_path() {
        let e = ConvexExpr::sum(vec![
            sq(),
            ConvexExpr::max(vec![sq(), ConvexExpr::affine(vec![1.0, 1.0], 0.0)]),
        ]);
        match e.validate(1) {
            Err(Error::Validation { path, .. }) => assert_eq!(path, "expr.sum[1].max[1]"),
            other => panic!("{other:?}"),
        }
        assert!(ConvexExpr::max(vec![]).validate(1).is_err());
    }

    #[test]
    fn psd_test_cases() {
        assert!(is_psd(&[vec![1.0, 1.0], vec![1.0, 1.0]]));
        assert!(!is_psd(&[vec![0.0, 1.0], vec![1.0, 0.0]]));
        assert!(!is_psd(&[vec![1.0, 2.0], vec![2.0, 1.0]]));
        assert!(is_psd(&[vec![0.0, 0.0], vec![0.0, 0.0]]));
        assert!(is_psd(&[vec![-1e-11]]));
        assert!(!is_psd(&[vec![-1e-9]]));
        let asym = ConvexExpr::quadratic(vec![vec![1.0, 0.5], vec![0.0, 1.0]], vec![0.0; 2], 0.0);
        assert!(asym.validate(2).is_err());
    }

    #[test]
    fn scale_linearity_is_exact() {
        let e = ConvexExpr::sum(vec![sq(), ConvexExpr::abs(vec![3.0], -1.0)]);
        let x = [0.7];
        let g = e.subgradient(&x).unwrap();
        let gs = ConvexExpr::scale(2.5, e).subgradient(&x).unwrap();
        assert_eq!(gs, vec![2.5 * g[0]]);
    }

    #[test]
    fn vertices_at_max_tie() {
        let m = ConvexExpr::max(vec![sq(), shifted_sq()]);
        let v = m
            .subdifferential_vertices(&[1.0], 1e-12, 64)
            .unwrap()
            .unwrap();
        assert_eq!(v, vec![vec![2.0], vec![-2.0]]);
        let a = ConvexExpr::abs(vec![1.0, 1.0], -1.0);
        let v = a
            .subdifferential_vertices(&[0.5, 0.5], 1e-12, 64)
            .unwrap()
            .unwrap();
        assert_eq!(v.len(), 2);
    }

    #[test]
    fn oracle_is_unverified() {
        let o = FnOracle {
            label: "quartic".into(),
            dim: 1,
            value: |x| x[0].powi(4),
            subgradient: |x| vec![4.0 * x[0].powi(3)],
        };
        let e = ConvexExpr::sum(vec![sq(), ConvexExpr::oracle(Arc::new(o))]);
        assert!(!e.is_verified());
        assert!(e.validate(1).is_ok());
        assert!(e.validate(2).is_err());
        assert_eq!(e.eval(&[2.0]).unwrap(), 4.0 + 16.0);
        assert_eq!(e.subgradient(&[2.0]).unwrap(), vec![4.0 + 32.0]);
    }
}
