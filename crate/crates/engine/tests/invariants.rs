//! Structural and semantic invariants of the explicit models and the
//! checker: stochastic rows, outcome partitions, time-rescaling laws,
//! jump-chain consistency, and degenerate-nondeterminism agreement.

mod common;

use std::collections::BTreeMap;

use admc_core::{BigRational, Value};
use admc_engine::{build, CheckOutcome, Checker, ExplicitModel};
use admc_prism::ast::{ModelType, PExpr};
use admc_prism::props::{PathForm, PropAst, ProbBound, SForm, TimeBound};
use admc_prism::{emit_model, parse_model, preprocess, transform, GenOptions};
use common::{build_group, build_prism_text, consts, fixture, load_activity};
use num_traits::ToPrimitive;
use proptest::prelude::*;

fn fp_consts() -> BTreeMap<String, Value> {
    consts(&[
        ("alpha", "0.9"),
        ("p1", "0.85"),
        ("beta", "0.3"),
        ("p2", "0.2"),
        ("p3", "0.6"),
        ("t1", "2.5"),
        ("t2", "1.5"),
        ("t3", "4.0"),
        ("e1", "0.3"),
        ("e2", "0.8"),
        ("e3", "1.2"),
    ])
}

/// Sums each state's one-step probability mass under the uniform-choice
/// rule; must be 1 within 1e-12 for every discrete-time model.
fn assert_rows_stochastic(em: &ExplicitModel, what: &str) {
    for (s, cs) in em.choices.iter().enumerate() {
        assert!(!cs.is_empty(), "{what}: dtmc state {s} has no choices");
        let share = 1.0 / cs.len() as f64;
        let sum: f64 = cs
            .iter()
            .flat_map(|c| c.branches.iter())
            .map(|(_, w)| share * w.to_f64().unwrap())
            .sum();
        assert!(
            (sum - 1.0).abs() <= 1e-12,
            "{what}: row {s} sums to {sum}"
        );
    }
}

#[test]
fn all_dtmc_models_have_stochastic_rows() {
    let (sd, _) = build_group("sd.adl", "sd_dtmc", None, &consts(&[("p", "0.5")]));
    assert_rows_stochastic(&sd, "sd_dtmc");
    let (tm, _) = build_group("tm.adl", "tm_dtmc", None, &BTreeMap::new());
    assert_rows_stochastic(&tm, "tm_dtmc");
    let (fp, _) = build_group("fp.adl", "fp_dtmc", None, &fp_consts());
    assert_rows_stochastic(&fp, "fp_dtmc");
    let walk = build_prism_text(
        &fixture("walk.prism"),
        &consts(&[("p1", "0.5"), ("p2", "0.6"), ("N", "10"), ("MaxBound", "30")]),
    );
    assert_rows_stochastic(&walk, "walk");
}

#[test]
fn dice_outcomes_partition_unity() {
    let (em, resolved) = build_group("sd.adl", "sd_dtmc", None, &consts(&[("p", "0.5")]));
    let checker = Checker::new(&em, &resolved.labels).unwrap();
    let mut total = 0.0f64;
    let mut flips = None;
    for (name, prop) in &resolved.properties {
        match checker.check(prop).unwrap() {
            CheckOutcome::Value { value, .. } => {
                if name.starts_with("reach") {
                    // A fair coin makes every face exactly 1/6.
                    assert!(
                        (value - 1.0 / 6.0).abs() < 1e-9,
                        "{name} = {value}"
                    );
                    total += value;
                } else {
                    flips = Some(value);
                }
            }
            other => panic!("{name}: unexpected {other:?}"),
        }
    }
    assert!((total - 1.0).abs() <= 1e-12, "outcomes sum to {total}");
    let flips = flips.expect("expected-flips property present");
    assert!((flips - 11.0 / 3.0).abs() < 1e-9, "expected flips {flips}");
}

/// A small ctmc with every rate proportional to `c`: from 0, go to the
/// target 2 at rate 2c or to the trap 3 at rate c, via an intermediate 1.
fn scaled_ctmc(c: f64) -> ExplicitModel {
    let src = format!(
        "ctmc\n\nmodule m\n  s : [0..3] init 0;\n  [] (s=0) -> {a}:(s'=1) + {b}:(s'=3);\n  [] (s=1) -> {d}:(s'=2);\nendmodule\n",
        a = 2.0 * c,
        b = c,
        d = 3.0 * c,
    );
    build_prism_text(&src, &BTreeMap::new())
}

fn reach_s2(em: &ExplicitModel, bound: Option<TimeBound>) -> f64 {
    let prop = PropAst::Prob {
        bound: ProbBound::Query,
        path: PathForm::Eventually(
            SForm::Atom(admc_prism::props::Atom::Raw(PExpr::eq(
                PExpr::ident("s"),
                PExpr::int(2),
            ))),
            bound,
        ),
    };
    match Checker::new(em, &[]).unwrap().check(&prop).unwrap() {
        CheckOutcome::Value { value, .. } => value,
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn rate_scaling_preserves_unbounded_and_rescales_bounded_answers() {
    let base = scaled_ctmc(1.0);
    let unb = reach_s2(&base, None);
    assert!((unb - 2.0 / 3.0).abs() < 1e-12, "branching probability {unb}");
    for &c in &[0.25, 4.0, 50.0] {
        let scaled = scaled_ctmc(c);
        let unb_c = reach_s2(&scaled, None);
        assert!((unb_c - unb).abs() < 1e-12, "c={c}: {unb_c} vs {unb}");
        // Time-bounded probabilities transform as t ↦ t/c.
        let t = 0.8;
        let lhs = reach_s2(
            &scaled,
            Some(TimeBound::Le(rat(t / c))),
        );
        let rhs = reach_s2(&base, Some(TimeBound::Le(rat(t))));
        assert!((lhs - rhs).abs() < 1e-9, "c={c}: {lhs} vs {rhs}");
    }
}

fn rat(x: f64) -> BigRational {
    BigRational::from_float(x).unwrap()
}

#[test]
fn ctmc_unbounded_reachability_equals_its_jump_chain() {
    // The same branching structure as `scaled_ctmc`, written directly as a
    // dtmc over the jump probabilities.
    let ctmc = scaled_ctmc(7.0);
    let jump = build_prism_text(
        "dtmc\n\nmodule m\n  s : [0..3] init 0;\n  [] (s=0) -> (2/3):(s'=1) + (1/3):(s'=3);\n  [] (s=1) -> 1.0:(s'=2);\nendmodule\n",
        &BTreeMap::new(),
    );
    let a = reach_s2(&ctmc, None);
    let b = reach_s2(&jump, None);
    assert!((a - b).abs() < 1e-12, "{a} vs {b}");
}

#[test]
fn issue_flow_completes_almost_surely() {
    let (em, resolved) = build_group("is.adl", "is_ctmc", Some("0.01"), &BTreeMap::new());
    let checker = Checker::new(&em, &resolved.labels).unwrap();
    let prop = PropAst::Prob {
        bound: ProbBound::Query,
        path: PathForm::Eventually(
            SForm::Atom(admc_prism::props::Atom::Label("complete".to_string())),
            None,
        ),
    };
    match checker.check(&prop).unwrap() {
        CheckOutcome::Value { value, .. } => {
            assert!((value - 1.0).abs() < 1e-9, "completion probability {value}")
        }
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn mdp_without_concurrency_degenerates_to_the_chain() {
    // A single-flow activity has one enabled command per state, so the
    // scheduler has no freedom: Pmax = Pmin = the dtmc value.
    let act = load_activity("sd.adl");
    let mm = preprocess(&act);
    let opts = GenOptions::default();
    let bindings = consts(&[("p", "0.5")]);

    let model = transform(&act, &mm, ModelType::Mdp, &opts).unwrap();
    let text = emit_model(&model).unwrap();
    let mdp = build(&parse_model(&text).unwrap(), &bindings).unwrap();

    let group = act.property_groups.iter().find(|g| g.name == "sd_dtmc").unwrap();
    let resolved = admc_prism::resolve_group(&act, &mm, group).unwrap();
    let (dtmc, _) = build_group("sd.adl", "sd_dtmc", None, &bindings);

    let (name, reach_prop) = resolved
        .properties
        .iter()
        .find(|(n, _)| n == "reach O3")
        .expect("dice group has reach O3");
    let PropAst::Prob { path, .. } = reach_prop else {
        panic!("{name} should be a P property");
    };

    let dtmc_value = match Checker::new(&dtmc, &resolved.labels)
        .unwrap()
        .check(reach_prop)
        .unwrap()
    {
        CheckOutcome::Value { value, .. } => value,
        other => panic!("unexpected {other:?}"),
    };
    let mdp_checker = Checker::new(&mdp, &resolved.labels).unwrap();
    let mut extremes = Vec::new();
    for bound in [ProbBound::Max, ProbBound::Min] {
        let p = PropAst::Prob { bound, path: path.clone() };
        match mdp_checker.check(&p).unwrap() {
            CheckOutcome::Value { value, .. } => extremes.push(value),
            other => panic!("unexpected {other:?}"),
        }
    }
    // Value iteration stops at a 1e-10 step, so allow its residual.
    assert!((extremes[0] - extremes[1]).abs() < 1e-8, "Pmax {} vs Pmin {}", extremes[0], extremes[1]);
    assert!((extremes[0] - dtmc_value).abs() < 1e-7, "mdp {} vs dtmc {}", extremes[0], dtmc_value);
}

// ---- randomized invariants ----

/// Random two-branch chain over n states rendered as model text; weights are
/// finite decimals so the parser's exact rationals sum to 1.
fn random_chain(n: usize, seeds: &[u16]) -> String {
    let mut cmds = String::new();
    for s in 0..n - 1 {
        let w = f64::from(seeds[s % seeds.len()] % 999 + 1) / 1000.0;
        let t1 = (s + 1) % n;
        let t2 = usize::from(seeds[(s + 1) % seeds.len()]) % n;
        if (w * 1000.0) as u64 == 1000 || t1 == t2 {
            cmds.push_str(&format!("  [] (s={s}) -> 1.0:(s'={t1});\n"));
        } else {
            cmds.push_str(&format!(
                "  [] (s={s}) -> {w:.3}:(s'={t1}) + {rest:.3}:(s'={t2});\n",
                rest = 1.0 - w
            ));
        }
    }
    format!(
        "dtmc\n\nmodule m\n  s : [0..{max}] init 0;\n{cmds}endmodule\n",
        max = n - 1
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn bounded_reachability_is_monotone_and_below_unbounded(
        n in 3usize..8,
        seeds in proptest::collection::vec(any::<u16>(), 8),
        k in 1u64..40,
    ) {
        let em = build_prism_text(&random_chain(n, &seeds), &BTreeMap::new());
        let target = SForm::Atom(admc_prism::props::Atom::Raw(PExpr::eq(
            PExpr::ident("s"),
            PExpr::int((n - 1) as i64),
        )));
        let checker = Checker::new(&em, &[]).unwrap();
        let value = |bound: Option<TimeBound>| -> f64 {
            let prop = PropAst::Prob {
                bound: ProbBound::Query,
                path: PathForm::Eventually(target.clone(), bound),
            };
            match checker.check(&prop).unwrap() {
                CheckOutcome::Value { value, .. } => value,
                CheckOutcome::Infinite => panic!("probability cannot be infinite"),
                CheckOutcome::Bool(_) => panic!("probability is numeric"),
            }
        };
        let shorter = value(Some(TimeBound::Le(BigRational::from_integer(k.into()))));
        let longer = value(Some(TimeBound::Le(BigRational::from_integer((k + 7).into()))));
        let unbounded = value(None);
        prop_assert!(shorter <= longer + 1e-12, "{shorter} > {longer}");
        prop_assert!(longer <= unbounded + 1e-12, "{longer} > {unbounded}");
    }

    #[test]
    fn random_rate_scaling_keeps_branching_probabilities(
        a in 1u32..500,
        b in 1u32..500,
        c in prop_oneof![Just(0.5f64), Just(3.0), Just(20.0)],
    ) {
        let mk = |scale: f64| {
            let src = format!(
                "ctmc\n\nmodule m\n  s : [0..2] init 0;\n  [] (s=0) -> {ra}:(s'=1) + {rb}:(s'=2);\nendmodule\n",
                ra = f64::from(a) * scale,
                rb = f64::from(b) * scale,
            );
            build_prism_text(&src, &BTreeMap::new())
        };
        let base = mk(1.0);
        let scaled = mk(c);
        let p_base = reach_s2(&base, None);
        let p_scaled = reach_s2(&scaled, None);
        let expected = f64::from(b) / f64::from(a + b);
        prop_assert!((p_base - expected).abs() < 1e-12);
        prop_assert!((p_base - p_scaled).abs() < 1e-12);
    }
}
