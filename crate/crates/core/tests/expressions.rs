//! Exact-arithmetic expression evaluation, printing, and the literal
//! helpers shared by the PRISM emitter.

use std::collections::BTreeMap;

use admc_core::expr::{decimal_digits, fmt_real, rational_from_decimal_str};
use admc_core::text::literal_expr;
use admc_core::{parse_activity_file, BigRational, CmpOp, EvalError, Expr, Value};
use num_bigint::BigInt;

fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// Parses an expression by embedding it as a guard annotation (the one
/// annotation position that accepts arbitrary open expressions).
fn parse_expr(src: &str) -> Expr {
    let text = format!(
        "activity a() {{ initial i; decision d; final f; \
         edge e1: i -> d; edge e2: d -> f {{ guard = {src}; }}; }}"
    );
    let file = parse_activity_file("expr.adl", &text)
        .unwrap_or_else(|e| panic!("`{src}` failed to parse: {e:?}"));
    match file.activities[0].edges[1].guard.clone().unwrap() {
        admc_core::Guard::Expr(e) => e,
        admc_core::Guard::Else => panic!("`{src}` parsed as else"),
    }
}

#[test]
fn evaluation_is_exact() {
    let mut env = BTreeMap::new();
    env.insert("p".to_string(), Value::Num(rat(793257, 1_000_000)));

    let e = parse_expr("1 - p");
    assert_eq!(e.eval(&env).unwrap(), Value::Num(rat(206_743, 1_000_000)));

    let e = parse_expr("p * p / (1 - p)");
    assert_eq!(
        e.eval(&env).unwrap(),
        Value::Num(rat(793257, 1_000_000) * rat(793257, 1_000_000) / rat(206_743, 1_000_000))
    );

    // 0.1 + 0.2 = 0.3 exactly, unlike floating point.
    let e = parse_expr("0.1 + 0.2");
    assert_eq!(e.eval(&env).unwrap(), Value::Num(rat(3, 10)));
}

#[test]
fn evaluation_errors() {
    let env = BTreeMap::new();
    assert_eq!(
        parse_expr("q + 1").eval(&env),
        Err(EvalError::UnboundParam("q".to_string()))
    );
    assert_eq!(
        parse_expr("1 / (2 - 2)").eval(&env),
        Err(EvalError::DivisionByZero)
    );
    assert!(matches!(
        parse_expr("true + 1").eval(&env),
        Err(EvalError::TypeMismatch(_))
    ));
}

#[test]
fn boolean_and_comparison_evaluation() {
    let mut env = BTreeMap::new();
    env.insert("x".to_string(), Value::Num(rat(3, 1)));
    assert_eq!(parse_expr("x < 4").eval(&env).unwrap(), Value::Bool(true));
    assert_eq!(parse_expr("x >= 4").eval(&env).unwrap(), Value::Bool(false));
    assert_eq!(parse_expr("x = 3").eval(&env).unwrap(), Value::Bool(true));
    assert_eq!(parse_expr("x != 3").eval(&env).unwrap(), Value::Bool(false));
    assert_eq!(
        parse_expr("x < 4 & !(x < 2)").eval(&env).unwrap(),
        Value::Bool(true)
    );
    assert_eq!(
        parse_expr("x < 2 | x > 2").eval(&env).unwrap(),
        Value::Bool(true)
    );
}

#[test]
fn parsing_respects_precedence() {
    // Multiplication binds tighter than subtraction.
    assert_eq!(
        parse_expr("1 - p * q"),
        Expr::Sub(
            Expr::int(1).into(),
            Expr::Mul(Expr::param("p").into(), Expr::param("q").into()).into()
        )
    );
    // Parentheses override.
    assert_eq!(
        parse_expr("(1 - p) * q"),
        Expr::Mul(
            Expr::Sub(Expr::int(1).into(), Expr::param("p").into()).into(),
            Expr::param("q").into()
        )
    );
    // Subtraction is left-associative.
    assert_eq!(
        parse_expr("1 - 2 - 3"),
        Expr::Sub(
            Expr::Sub(Expr::int(1).into(), Expr::int(2).into()).into(),
            Expr::int(3).into()
        )
    );
    // Comparison binds looser than arithmetic.
    assert_eq!(
        parse_expr("p + 1 < q * 2"),
        Expr::Cmp(
            CmpOp::Lt,
            Expr::Add(Expr::param("p").into(), Expr::int(1).into()).into(),
            Expr::Mul(Expr::param("q").into(), Expr::int(2).into()).into()
        )
    );
}

#[test]
fn display_reparses_to_the_same_ast() {
    for src in [
        "1 - p * q",
        "(1 - p) * q",
        "1 - 2 - 3",
        "1 - (2 - 3)",
        "-(-p)",
        "-p + q",
        "p / q / 2",
        "p / (q / 2)",
        "!(p < 1) & q > 0 | false",
        "p + 1 < q * 2",
        "1.5e-3 * p",
    ] {
        let e = parse_expr(src);
        let printed = e.to_string();
        let reparsed = parse_expr(&printed);
        assert_eq!(reparsed, e, "`{src}` printed as `{printed}`");
    }
}

#[test]
fn scientific_notation_is_exact() {
    assert_eq!(rational_from_decimal_str("1e-8"), Some(rat(1, 100_000_000)));
    assert_eq!(rational_from_decimal_str("2.5e3"), Some(rat(2500, 1)));
    assert_eq!(rational_from_decimal_str("0.125"), Some(rat(1, 8)));
    assert_eq!(rational_from_decimal_str("42"), Some(rat(42, 1)));
    assert_eq!(rational_from_decimal_str(""), None);
    assert_eq!(rational_from_decimal_str("1.2.3"), None);
    assert_eq!(rational_from_decimal_str("abc"), None);

    let e = parse_expr("1e-8");
    assert_eq!(e, Expr::Real(rat(1, 100_000_000)));
}

#[test]
fn decimal_rendering() {
    assert_eq!(decimal_digits(&rat(1, 8), 12), Some("0.125".to_string()));
    assert_eq!(decimal_digits(&rat(-1, 8), 12), Some("-0.125".to_string()));
    assert_eq!(decimal_digits(&rat(5, 1), 12), Some("5.0".to_string()));
    assert_eq!(decimal_digits(&rat(1, 3), 12), None);
    assert_eq!(decimal_digits(&rat(1, 8192), 3), None); // needs 13 digits
    assert_eq!(fmt_real(&rat(1, 4)), "0.25");
    assert_eq!(fmt_real(&rat(1, 3)), "(1/3)");
    // Beyond 12 digits the printer still prefers an exact decimal.
    assert_eq!(fmt_real(&rat(1, 8192)), "0.0001220703125");
}

#[test]
fn literal_helper_distinguishes_ints_and_reals() {
    assert_eq!(literal_expr("3"), Some(Expr::int(3)));
    assert_eq!(literal_expr("3.0"), Some(Expr::Real(rat(3, 1))));
    assert_eq!(literal_expr("1e2"), Some(Expr::Real(rat(100, 1))));
    assert_eq!(literal_expr("bogus"), None);
}

#[test]
fn free_params_collects_every_reference() {
    let e = parse_expr("alpha * p1 * (1 - beta * p2) / (1 - q)");
    let params: Vec<String> = e.free_params().into_iter().collect();
    assert_eq!(params, ["alpha", "beta", "p1", "p2", "q"]);
    assert!(Expr::int(1).free_params().is_empty());
}

#[test]
fn value_conversions() {
    assert_eq!(Value::Num(rat(1, 2)).to_f64(), Some(0.5));
    assert_eq!(Value::Bool(true).to_f64(), None);
    assert!(Value::Num(rat(1, 2)).as_num().is_ok());
    assert!(Value::Bool(true).as_num().is_err());
    assert!(Value::Bool(true).as_bool().is_ok());
    assert!(Value::Num(rat(1, 2)).as_bool().is_err());
}
