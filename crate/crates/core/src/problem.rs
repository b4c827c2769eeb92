//! Problem descriptions and their JSON-shaped text format.
//!
//! ```text
//! document := { "d": int, "objective": expr, "ineq": [expr…], "eq": [affine-expr…] }
//! expr     := {"affine": {"a":[num…], "b":num}}
//!           | {"quad": {"Q":[[num…]…], "a":[num…], "b":num}}
//!           | {"sum": [expr…]} | {"scale": {"c":num, "of":expr}}
//!           | {"max": [expr…]} | {"abs": {"a":[num…], "b":num}}
//! ```
//!
//! Unknown keys are rejected. [`serialize_problem`] writes a canonical form: no
//! whitespace, keys in the order above, integral values without a fraction and
//! everything else in shortest round-trip notation.

use std::fmt::Write as _;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::expr::{Affine, ConvexExpr};

/// `min f(x)  s.t.  f_i(x) ≤ 0,  h_j(x) = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    d: usize,
    objective: ConvexExpr,
    inequalities: Vec<ConvexExpr>,
    equalities: Vec<Affine>,
}

impl Problem {
    pub fn new(
        d: usize,
        objective: ConvexExpr,
        inequalities: Vec<ConvexExpr>,
        equalities: Vec<Affine>,
    ) -> Result<Self> {
        if d == 0 {
            return Err(Error::Validation {
                path: "d".into(),
                rule: "dimension must be positive".into(),
            });
        }
        objective.validate_at(d, "objective")?;
        for (i, f) in inequalities.iter().enumerate() {
            f.validate_at(d, &format!("ineq[{i}]"))?;
        }
        for (i, h) in equalities.iter().enumerate() {
            ConvexExpr::Affine(h.clone()).validate_at(d, &format!("eq[{i}]"))?;
        }
        Ok(Problem {
            d,
            objective,
            inequalities,
            equalities,
        })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn objective(&self) -> &ConvexExpr {
        &self.objective
    }

    pub fn inequalities(&self) -> &[ConvexExpr] {
        &self.inequalities
    }

    pub fn equalities(&self) -> &[Affine] {
        &self.equalities
    }

    pub fn is_constrained(&self) -> bool {
        !(self.inequalities.is_empty() && self.equalities.is_empty())
    }

    /// False if any function is supplied through an unchecked oracle.
    pub fn is_verified(&self) -> bool {
        self.objective.is_verified() && self.inequalities.iter().all(ConvexExpr::is_verified)
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDocument {
    d: usize,
    objective: RawExpr,
    ineq: Vec<RawExpr>,
    eq: Vec<RawExpr>,
}

#[derive(Deserialize)]
#[serde(rename_all = "lowercase")]
enum RawExpr {
    Affine(RawAffine),
    Quad(RawQuad),
    Sum(Vec<RawExpr>),
    Scale(RawScale),
    Max(Vec<RawExpr>),
    Abs(RawAffine),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAffine {
    a: Vec<f64>,
    b: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawQuad {
    #[serde(rename = "Q")]
    q: Vec<Vec<f64>>,
    a: Vec<f64>,
    b: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScale {
    c: f64,
    of: Box<RawExpr>,
}

impl From<RawExpr> for ConvexExpr {
    fn from(raw: RawExpr) -> Self {
        match raw {
            RawExpr::Affine(RawAffine { a, b }) => ConvexExpr::affine(a, b),
            RawExpr::Quad(RawQuad { q, a, b }) => ConvexExpr::quadratic(q, a, b),
            RawExpr::Sum(cs) => ConvexExpr::sum(cs.into_iter().map(Into::into).collect()),
            RawExpr::Scale(RawScale { c, of }) => ConvexExpr::scale(c, (*of).into()),
            RawExpr::Max(cs) => ConvexExpr::max(cs.into_iter().map(Into::into).collect()),
            RawExpr::Abs(RawAffine { a, b }) => ConvexExpr::abs(a, b),
        }
    }
}

pub fn parse_problem(text: &str) -> Result<Problem> {
    let raw: RawDocument = serde_json::from_str(text).map_err(|e| Error::Parse {
        line: e.line(),
        column: e.column(),
        message: strip_position(&e.to_string()),
    })?;
    let equalities = raw
        .eq
        .into_iter()
        .enumerate()
        .map(|(index, e)| match e {
            RawExpr::Affine(RawAffine { a, b }) => Ok(Affine::new(a, b)),
            _ => Err(Error::EqualityNotAffine { index }),
        })
        .collect::<Result<Vec<_>>>()?;
    Problem::new(
        raw.d,
        raw.objective.into(),
        raw.ineq.into_iter().map(Into::into).collect(),
        equalities,
    )
}

fn strip_position(msg: &str) -> String {
    match msg.rfind(" at line ") {
        Some(i) => msg[..i].to_string(),
        None => msg.to_string(),
    }
}

pub fn serialize_problem(p: &Problem) -> Result<String> {
    let mut out = String::new();
    write!(out, "{{\"d\":{},\"objective\":", p.d).unwrap();
    write_expr(&mut out, &p.objective, "objective")?;
    out.push_str(",\"ineq\":[");
    for (i, f) in p.inequalities.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        write_expr(&mut out, f, &format!("ineq[{i}]"))?;
    }
    out.push_str("],\"eq\":[");
    for (i, h) in p.equalities.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        out.push_str("{\"affine\":");
        write_affine(&mut out, h);
        out.push('}');
    }
    out.push_str("]}");
    Ok(out)
}

fn write_expr(out: &mut String, e: &ConvexExpr, path: &str) -> Result<()> {
    match e {
        ConvexExpr::Affine(aff) => {
            out.push_str("{\"affine\":");
            write_affine(out, aff);
            out.push('}');
        }
        ConvexExpr::Quadratic { q, a, b } => {
            out.push_str("{\"quad\":{\"Q\":[");
            for (i, row) in q.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_vec(out, row);
            }
            out.push_str("],\"a\":");
            write_vec(out, a);
            out.push_str(",\"b\":");
            out.push_str(&format_number(*b));
            out.push_str("}}");
        }
        ConvexExpr::Sum(cs) | ConvexExpr::Max(cs) => {
            let key = if matches!(e, ConvexExpr::Sum(_)) {
                "sum"
            } else {
                "max"
            };
            write!(out, "{{\"{key}\":[").unwrap();
            for (i, c) in cs.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_expr(out, c, &format!("{path}.{key}[{i}]"))?;
            }
            out.push_str("]}");
        }
        ConvexExpr::Scale { c, child } => {
            write!(out, "{{\"scale\":{{\"c\":{},\"of\":", format_number(*c)).unwrap();
            write_expr(out, child, &format!("{path}.scale"))?;
            out.push_str("}}");
        }
        ConvexExpr::Abs(aff) => {
            out.push_str("{\"abs\":");
            write_affine(out, aff);
            out.push('}');
        }
        ConvexExpr::Oracle(_) => return Err(Error::NotSerializable(path.to_string())),
    }
    Ok(())
}

fn write_affine(out: &mut String, aff: &Affine) {
    out.push_str("{\"a\":");
    write_vec(out, &aff.a);
    out.push_str(",\"b\":");
    out.push_str(&format_number(aff.b));
    out.push('}');
}

fn write_vec(out: &mut String, v: &[f64]) {
    out.push('[');
    for (i, x) in v.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        out.push_str(&format_number(*x));
    }
    out.push(']');
}

/// Shortest round-trip rendering; integral values below 2^53 print without a fraction.
pub fn format_number(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if x.fract() == 0.0 && x.abs() < 9_007_199_254_740_992.0 {
        return format!("{}", x as i64);
    }
    format!("{x:?}")
}

#[cfg(test)]
mod tests {
    use super::*;

    const P1: &str = r#"{"d":1,"objective":{"affine":{"a":[1],"b":0}},"ineq":[{"affine":{"a":[-1],"b":0}}],"eq":[]}"#;

    #[test]
    fn parses_halfline_problem() {
        let p = parse_problem(P1).unwrap();
        assert_eq!(p.dim(), 1);
        assert_eq!(p.objective(), &ConvexExpr::affine(vec![1.0], 0.0));
        assert_eq!(p.inequalities(), &[ConvexExpr::affine(vec![-1.0], 0.0)]);
        assert!(p.equalities().is_empty());
    }

    #[test]
    fn canonical_form_matches_document() {
        let p = parse_problem(P1).unwrap();
        assert_eq!(serialize_problem(&p).unwrap(), P1);
    }

    #[test]
    fn rejects_non_affine_equality() {
        let doc = r#"{"d":1,"objective":{"affine":{"a":[1],"b":0}},"ineq":[],
            "eq":[{"quad":{"Q":[[2]],"a":[0],"b":0}}]}"#;
        assert_eq!(
            parse_problem(doc),
            Err(Error::EqualityNotAffine { index: 0 })
        );
    }

    #[test]
    fn rejects_unknown_keys() {
        let extra_top = r#"{"d":1,"objective":{"affine":{"a":[1],"b":0}},"ineq":[],"eq":[],"x":1}"#;
        assert!(matches!(parse_problem(extra_top), Err(Error::Parse { .. })));
        let extra_leaf =
            r#"{"d":1,"objective":{"affine":{"a":[1],"b":0,"c":2}},"ineq":[],"eq":[]}"#;
        assert!(matches!(
            parse_problem(extra_leaf),
            Err(Error::Parse { .. })
        ));
        let bad_kind = r#"{"d":1,"objective":{"cube":{"a":[1],"b":0}},"ineq":[],"eq":[]}"#;
        assert!(matches!(parse_problem(bad_kind), Err(Error::Parse { .. })));
        let two_kinds = r#"{"d":1,"objective":{"affine":{"a":[1],"b":0},"abs":{"a":[1],"b":0}},"ineq":[],"eq":[]}"#;
        assert!(matches!(parse_problem(two_kinds), Err(Error::Parse { .. })));
    }

    #[test]
    fn syntax_errors_carry_position() {
        let doc = "{\"d\":1,\n\"objective\": {\"affine\": {\"a\":[1], \"b\":}}}";
        match parse_problem(doc) {
            Err(Error::Parse { line, column, .. }) => {
                assert_eq!(line, 2);
                assert!(column > 1);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn validation_errors_surface() {
        let doc = r#"{"d":1,"objective":{"quad":{"Q":[[-1]],"a":[0],"b":0}},"ineq":[],"eq":[]}"#;
        match parse_problem(doc) {
            Err(Error::Validation { path, .. }) => assert_eq!(path, "objective"),
            other => panic!("{other:?}"),
        }
        let doc = r#"{"d":2,"objective":{"affine":{"a":[1],"b":0}},"ineq":[],"eq":[]}"#;
        assert!(matches!(parse_problem(doc), Err(Error::Validation { .. })));
    }

    #[test]
    fn integers_are_widened() {
        let doc = r#"{"d":1,"objective":{"scale":{"c":2,"of":{"abs":{"a":[3],"b":-1.5}}}},"ineq":[],"eq":[]}"#;
        let p = parse_problem(doc).unwrap();
        assert_eq!(p.objective().eval(&[1.0]).unwrap(), 3.0);
        assert_eq!(serialize_problem(&p).unwrap(), doc);
    }

    #[test]
    fn number_format() {
        assert_eq!(format_number(-0.0), "0");
        assert_eq!(format_number(-4.0), "-4");
        assert_eq!(format_number(0.1), "0.1");
        assert_eq!(format_number(1e-7), "1e-7");
        assert_eq!(format_number(1e300), "1e300");
        let x = 0.1 + 0.2;
        assert_eq!(format_number(x).parse::<f64>().unwrap(), x);
    }
}
