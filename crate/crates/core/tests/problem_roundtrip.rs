use proptest::prelude::*;

use wda::{parse_problem, serialize_problem, Affine, ConvexExpr, Problem};

fn num() -> impl Strategy<Value = f64> {
    prop_oneof![
        (-50i32..50).prop_map(f64::from),
        -1e3..1e3f64,
        (-1e-3..1e-3f64),
        Just(1e-300),
        Just(-2.5e17),
    ]
}

fn vec_of(d: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(num(), d)
}

/// `Q = BᵀB` is exactly symmetric and PSD up to rounding.
fn psd(d: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(-3.0..3.0f64, d), d).prop_map(move |b| {
        (0..d)
            .map(|i| {
                (0..d)
                    .map(|j| (0..d).map(|k| b[k][i] * b[k][j]).sum())
                    .collect()
            })
            .collect()
    })
}

fn expr(d: usize) -> impl Strategy<Value = ConvexExpr> {
    let leaf = prop_oneof![
        (vec_of(d), num()).prop_map(|(a, b)| ConvexExpr::affine(a, b)),
        (vec_of(d), num()).prop_map(|(a, b)| ConvexExpr::abs(a, b)),
        (psd(d), vec_of(d), num()).prop_map(|(q, a, b)| ConvexExpr::quadratic(q, a, b)),
    ];
    leaf.prop_recursive(3, 16, 3, |inner| {
        prop_oneof![
            prop::collection::vec(inner.clone(), 0..3).prop_map(ConvexExpr::sum),
            prop::collection::vec(inner.clone(), 1..3).prop_map(ConvexExpr::max),
            (0.0..10.0f64, inner).prop_map(|(c, e)| ConvexExpr::scale(c, e)),
        ]
    })
}

fn problem() -> impl Strategy<Value = Problem> {
    (1usize..4).prop_flat_map(|d| {
        (
            expr(d),
            prop::collection::vec(expr(d), 0..3),
            prop::collection::vec((vec_of(d), num()), 0..3),
        )
            .prop_map(move |(obj, ineq, eq)| {
                let eq = eq.into_iter().map(|(a, b)| Affine::new(a, b)).collect();
                Problem::new(d, obj, ineq, eq).expect("generated problem is valid")
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn parse_inverts_serialize(p in problem()) {
        let text = serialize_problem(&p).unwrap();
        let back = parse_problem(&text).unwrap();
        prop_assert_eq!(&back, &p);
        prop_assert_eq!(serialize_problem(&back).unwrap(), text);
    }
}

#[test]
fn zoo_corpus_round_trips() {
    for entry in wda::zoo::all() {
        let Ok(text) = serialize_problem(&entry.problem) else {
            assert!(!entry.is_serializable());
            continue;
        };
        let p = parse_problem(&text).unwrap();
        assert_eq!(p, entry.problem);
        assert_eq!(serialize_problem(&p).unwrap(), text, "{}", entry.name);
    }
}
