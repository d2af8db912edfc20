//! Property tests for the wind-expression language: rendering is a lossless
//! inverse of parsing, symbolic differentiation agrees with dual-number
//! differentiation wherever both are defined, and malformed input fails
//! cleanly instead of panicking.

use proptest::prelude::*;

use delrelax::windexpr::{differentiate, eval_dual, parse, DerivOrder, Var};
use delrelax::Vec2;

/// Strings that are valid expressions by construction.
fn expr_strategy() -> impl Strategy<Value = String> {
    let leaf = prop_oneof![
        Just("x".to_string()),
        Just("y".to_string()),
        Just("pi".to_string()),
        (1..=9u32).prop_map(|n| n.to_string()),
        (1..=99u32).prop_map(|n| format!("0.{n:02}")),
    ];
    leaf.prop_recursive(3, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a} + {b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a} - {b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a} * {b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a} / {b})")),
            (inner.clone(), 2..=3u32).prop_map(|(a, k)| format!("({a})^{k}")),
            inner.clone().prop_map(|a| format!("-({a})")),
            (
                prop_oneof![
                    Just("sin"),
                    Just("cos"),
                    Just("tan"),
                    Just("exp"),
                    Just("log"),
                    Just("sqrt"),
                    Just("abs"),
                ],
                inner,
            )
                .prop_map(|(f, a)| format!("{f}({a})")),
        ]
    })
}

proptest! {
    /// Rendering a parsed expression and parsing it back gives the same
    /// tree, and rendering is stable from then on.
    #[test]
    fn render_parse_round_trip(src in expr_strategy()) {
        let parsed = parse(&src).expect("generated expressions are valid");
        let rendered = parsed.render();
        let reparsed = parse(&rendered)
            .unwrap_or_else(|e| panic!("rendering '{src}' as '{rendered}' broke parsing: {e}"));
        prop_assert_eq!(&reparsed, &parsed);
        prop_assert_eq!(reparsed.render(), rendered);
    }

    /// The symbolic partial derivatives, evaluated numerically, agree with
    /// the dual-number gradient wherever the expression is smooth.
    #[test]
    fn symbolic_gradient_matches_dual_gradient(
        src in expr_strategy(),
        x in -2.0..2.0f64,
        y in -2.0..2.0f64,
    ) {
        let expr = parse(&src).unwrap();
        let p = Vec2::new(x, y);

        let Ok(jet) = eval_dual(&expr, p, DerivOrder::Gradient) else {
            return Ok(()); // outside the domain (log of a negative, ...)
        };
        prop_assume!(jet.value.is_finite() && jet.gradient.x.is_finite() && jet.gradient.y.is_finite());
        // Skip astronomically scaled cases where any comparison is noise.
        prop_assume!(jet.gradient.norm() < 1e9);

        for (var, dual) in [(Var::X, jet.gradient.x), (Var::Y, jet.gradient.y)] {
            let Ok(derivative) = differentiate(&expr, var) else {
                return Ok(()); // non-differentiable construct at this form (abs, ...)
            };
            let Ok(symbolic) = derivative.eval_at(p) else {
                return Ok(());
            };
            prop_assume!(symbolic.is_finite());
            let scale = 1.0f64.max(dual.abs()).max(jet.value.abs());
            prop_assert!(
                (symbolic - dual).abs() <= 1e-9 * scale,
                "d/d{var:?} of '{src}' at {p:?}: symbolic {symbolic} vs dual {dual}"
            );
        }
    }

    /// Second derivatives commute: the dual-number Hessian is bitwise
    /// symmetric.
    #[test]
    fn dual_hessian_is_bitwise_symmetric(
        src in expr_strategy(),
        x in -2.0..2.0f64,
        y in -2.0..2.0f64,
    ) {
        let expr = parse(&src).unwrap();
        let Ok(jet) = eval_dual(&expr, Vec2::new(x, y), DerivOrder::Hessian) else {
            return Ok(());
        };
        let h = jet.hessian.expect("hessian was requested");
        prop_assert_eq!(h.m[0][1].to_bits(), h.m[1][0].to_bits());
    }

    /// Arbitrary short inputs never panic the parser: they parse or they
    /// return a structured error.
    #[test]
    fn parser_never_panics(src in "[ -~]{0,24}") {
        let _ = parse(&src);
    }

    /// Differentiating twice through the symbolic path stays consistent
    /// with the dual-number Hessian diagonal.
    #[test]
    fn symbolic_second_derivative_matches_dual_hessian(
        src in expr_strategy(),
        x in -2.0..2.0f64,
        y in -2.0..2.0f64,
    ) {
        let expr = parse(&src).unwrap();
        let p = Vec2::new(x, y);
        let Ok(jet) = eval_dual(&expr, p, DerivOrder::Hessian) else {
            return Ok(());
        };
        let h = jet.hessian.unwrap();
        prop_assume!(h.m[0][0].is_finite() && h.m[1][1].is_finite());
        prop_assume!(h.m[0][0].abs() < 1e9 && h.m[1][1].abs() < 1e9);

        for (var, dual_second) in [(Var::X, h.m[0][0]), (Var::Y, h.m[1][1])] {
            let Ok(first) = differentiate(&expr, var) else { return Ok(()) };
            let Ok(second) = differentiate(&first, var) else { return Ok(()) };
            let Ok(symbolic) = second.eval_at(p) else { return Ok(()) };
            prop_assume!(symbolic.is_finite());
            let scale = 1.0f64.max(dual_second.abs()).max(jet.value.abs());
            prop_assert!(
                (symbolic - dual_second).abs() <= 1e-8 * scale,
                "d²/d{var:?}² of '{src}' at {p:?}: symbolic {symbolic} vs dual {dual_second}"
            );
        }
    }
}
