use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use wda::penalty::{self, PrimalDualPoint};
use wda::zoo;
use wda::ConvexExpr;

fn random_point(rng: &mut ChaCha8Rng, d: usize, spread: f64) -> Vec<f64> {
    (0..d).map(|_| rng.gen_range(-spread..spread)).collect()
}

fn inner(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Every expression in the zoo (objective and constraints) satisfies
/// `e(y) ≥ e(x) + ⟨g(x), y − x⟩` for the selected subgradient.
#[test]
fn subgradient_inequality_on_zoo_expressions() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for entry in zoo::all() {
        let p = &entry.problem;
        let mut exprs: Vec<ConvexExpr> = vec![p.objective().clone()];
        exprs.extend(p.inequalities().iter().cloned());
        exprs.extend(p.equalities().iter().map(|h| ConvexExpr::Abs(h.clone())));
        for e in &exprs {
            for _ in 0..100 {
                let x = random_point(&mut rng, p.dim(), 3.0);
                let y = random_point(&mut rng, p.dim(), 3.0);
                let g = e.subgradient(&x).unwrap();
                let diff: Vec<f64> = y.iter().zip(&x).map(|(a, b)| a - b).collect();
                let slack = e.eval(&y).unwrap() - e.eval(&x).unwrap() - inner(&g, &diff);
                assert!(slack >= -1e-9, "{}: slack {slack}", entry.name);
            }
        }
    }
}

#[test]
fn violation_subgradient_inequality() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for entry in zoo::all()
        .into_iter()
        .filter(|e| e.problem.is_constrained())
    {
        let p = &entry.problem;
        for _ in 0..100 {
            let x = random_point(&mut rng, p.dim(), 3.0);
            let y = random_point(&mut rng, p.dim(), 3.0);
            let g = penalty::violation_subgradient(p, &x).unwrap();
            let diff: Vec<f64> = y.iter().zip(&x).map(|(a, b)| a - b).collect();
            let slack = penalty::violation(p, &y).unwrap()
                - penalty::violation(p, &x).unwrap()
                - inner(&g, &diff);
            assert!(slack >= -1e-9, "{}: slack {slack}", entry.name);
        }
    }
}

/// For λ ≥ 0, `G_x` is a subgradient of the convex map `x ↦ F(x, λ)`.
#[test]
fn penalized_subgradient_inequality() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for entry in zoo::all()
        .into_iter()
        .filter(|e| e.problem.is_constrained())
    {
        let p = &entry.problem;
        for _ in 0..100 {
            let lambda = rng.gen_range(0.0..5.0);
            let x = random_point(&mut rng, p.dim(), 3.0);
            let y = random_point(&mut rng, p.dim(), 3.0);
            let wx = PrimalDualPoint::new(x.clone(), lambda);
            let wy = PrimalDualPoint::new(y.clone(), lambda);
            let g = penalty::subgradient_sample(p, &wx).unwrap();
            let n2 = inner(&g.g_x, &g.g_x) + g.g_lambda * g.g_lambda;
            assert!((g.norm * g.norm - n2).abs() <= 1e-12 * n2.max(1.0));
            let diff: Vec<f64> = y.iter().zip(&x).map(|(a, b)| a - b).collect();
            let slack = penalty::penalty_value(p, &wy).unwrap()
                - penalty::penalty_value(p, &wx).unwrap()
                - inner(&g.g_x, &diff);
            assert!(slack >= -1e-9, "{}: slack {slack}", entry.name);
        }
    }
}

#[test]
fn optimum_is_feasible() {
    for entry in zoo::all()
        .into_iter()
        .filter(|e| e.problem.is_constrained())
    {
        let v = penalty::violation(&entry.problem, &entry.certificate.x_star).unwrap();
        assert!(v.abs() <= 1e-9, "{}: {v}", entry.name);
    }
}

#[test]
fn max_selection_is_consistent() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for entry in zoo::all() {
        let p = &entry.problem;
        let mut maxes = Vec::new();
        collect_max(p.objective(), &mut maxes);
        for e in maxes {
            let ConvexExpr::Max(children) = &e else {
                unreachable!()
            };
            for _ in 0..100 {
                let x = random_point(&mut rng, p.dim(), 3.0);
                let i = e.selected_child(&x).unwrap().unwrap();
                assert_eq!(children[i].eval(&x).unwrap(), e.eval(&x).unwrap());
                assert_eq!(
                    children[i].subgradient(&x).unwrap(),
                    e.subgradient(&x).unwrap()
                );
            }
        }
    }
}

fn collect_max(e: &ConvexExpr, out: &mut Vec<ConvexExpr>) {
    match e {
        ConvexExpr::Max(cs) => {
            out.push(e.clone());
            cs.iter().for_each(|c| collect_max(c, out));
        }
        ConvexExpr::Sum(cs) => cs.iter().for_each(|c| collect_max(c, out)),
        ConvexExpr::Scale { child, .. } => collect_max(child, out),
        _ => {}
    }
}

/// Smooth leaves agree with central differences at step 1e-6.
#[test]
fn smooth_leaves_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(19);
    for _ in 0..50 {
        let d = rng.gen_range(1..5);
        let b: Vec<Vec<f64>> = (0..d).map(|_| random_point(&mut rng, d, 1.0)).collect();
        let q: Vec<Vec<f64>> = (0..d)
            .map(|i| {
                (0..d)
                    .map(|j| (0..d).map(|k| b[k][i] * b[k][j]).sum())
                    .collect()
            })
            .collect();
        let a = random_point(&mut rng, d, 2.0);
        for e in [
            ConvexExpr::quadratic(q.clone(), a.clone(), 0.5),
            ConvexExpr::affine(a.clone(), -1.0),
        ] {
            e.validate(d).unwrap();
            let x = random_point(&mut rng, d, 2.0);
            let g = e.subgradient(&x).unwrap();
            let h = 1e-6;
            for i in 0..d {
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[i] += h;
                xm[i] -= h;
                let fd = (e.eval(&xp).unwrap() - e.eval(&xm).unwrap()) / (2.0 * h);
                let rel = (fd - g[i]).abs() / g[i].abs().max(1.0);
                assert!(rel <= 1e-4, "component {i}: fd {fd}, g {}", g[i]);
            }
        }
    }
}

#[test]
fn scale_and_sum_are_linear() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let (p, _) = zoo::get_problem("tiny-svm").unwrap();
    for _ in 0..100 {
        let x = random_point(&mut rng, 3, 2.0);
        let c = rng.gen_range(0.0..4.0);
        let g = p.objective().subgradient(&x).unwrap();
        let gs = ConvexExpr::scale(c, p.objective().clone())
            .subgradient(&x)
            .unwrap();
        for (a, b) in g.iter().zip(&gs) {
            assert_eq!(c * a, *b);
        }
    }
}
