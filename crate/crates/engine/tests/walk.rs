//! End-to-end verification on the random-walk fixture: a two-module model
//! and a hand-flattened single-module version of the same system must
//! explore identical state spaces and produce identical answers, and both
//! must hit independently computed reference values.

mod common;

use std::collections::BTreeMap;
use std::time::Instant;

use admc_core::fmt_real;
use admc_engine::{build, CheckOutcome, Checker, ExplicitModel};
use admc_prism::parse_model;
use admc_prism::props::parse_props_file;
use common::{build_prism_text, consts, fixture};

const REF_BOUNDED: f64 = 0.23914284022469873;
const REF_REWARD: f64 = 160.81484064415852;

fn walk_consts() -> BTreeMap<String, admc_core::Value> {
    consts(&[("p1", "0.5"), ("p2", "0.6"), ("N", "10"), ("MaxBound", "30")])
}

fn check_values(em: &ExplicitModel) -> (f64, f64) {
    let props = parse_props_file(&fixture("walk.props")).expect("props parse");
    assert_eq!(props.properties.len(), 2);
    let checker = Checker::new(em, &props.labels).unwrap();
    let mut out = Vec::new();
    for p in &props.properties {
        match checker.check(p).expect("check succeeds") {
            CheckOutcome::Value { value, .. } => out.push(value),
            other => panic!("expected a numeric result, got {other:?}"),
        }
    }
    (out[0], out[1])
}

#[test]
fn walk_matches_reference_values_quickly() {
    let start = Instant::now();
    let em = build_prism_text(&fixture("walk.prism"), &walk_consts());
    let (bounded, reward) = check_values(&em);
    assert!(
        (bounded - REF_BOUNDED).abs() < 1e-9,
        "bounded reachability {bounded} vs reference {REF_BOUNDED}"
    );
    assert!(
        (reward - REF_REWARD).abs() < 1e-6,
        "expected reward {reward} vs reference {REF_REWARD}"
    );
    assert!(start.elapsed().as_secs_f64() < 5.0, "walk analysis exceeded 5s");
}

#[test]
fn flattened_walk_is_equivalent() {
    let mod_em = build_prism_text(&fixture("walk.prism"), &walk_consts());
    let msm_em = build_prism_text(&fixture("walk_msm.prism"), &walk_consts());

    // Identical reachable state spaces (the walkers' parities cut the cube
    // in half) and identical initial states.
    assert_eq!(mod_em.state_count(), msm_em.state_count());
    assert_eq!(mod_em.state_count(), 6836);
    assert_eq!(
        mod_em.render_state(mod_em.initial),
        msm_em.render_state(msm_em.initial)
    );

    // Identical transition structure: compare the multiset of
    // (source, action, target, exact weight) over rendered states.
    let multiset = |em: &ExplicitModel| {
        let mut v: Vec<(String, String, String, String)> = Vec::new();
        for (s, cs) in em.choices.iter().enumerate() {
            for c in cs {
                for (t, w) in &c.branches {
                    v.push((
                        em.render_state(s),
                        c.action.clone().unwrap_or_default(),
                        em.render_state(*t),
                        fmt_real(w),
                    ));
                }
            }
        }
        v.sort();
        v
    };
    assert_eq!(multiset(&mod_em), multiset(&msm_em));

    // And identical answers.
    let (b1, r1) = check_values(&mod_em);
    let (b2, r2) = check_values(&msm_em);
    assert!((b1 - b2).abs() < 1e-12, "bounded: {b1} vs {b2}");
    assert!((r1 - r2).abs() < 1e-9, "reward: {r1} vs {r2}");
}

#[test]
fn missing_constants_are_reported_together() {
    let model = parse_model(&fixture("walk.prism")).unwrap();
    let err = build(&model, &BTreeMap::new()).unwrap_err();
    let msg = err.to_string();
    for name in ["p1", "p2", "N", "MaxBound"] {
        assert!(msg.contains(name), "{msg} should name {name}");
    }
    // Partially supplied: only the rest are reported.
    let err = build(&model, &consts(&[("p1", "0.5"), ("N", "10")])).unwrap_err();
    let msg = err.to_string();
    assert!(!msg.contains("p1") && !msg.contains('N'), "{msg}");
    assert!(msg.contains("p2") && msg.contains("MaxBound"), "{msg}");
}

#[test]
fn unknown_constant_bindings_are_rejected() {
    let model = parse_model(&fixture("walk.prism")).unwrap();
    let mut bindings = walk_consts();
    bindings.insert("typo".to_string(), admc_core::Value::Bool(true));
    let err = build(&model, &bindings).unwrap_err();
    assert!(err.to_string().contains("typo"));
}
