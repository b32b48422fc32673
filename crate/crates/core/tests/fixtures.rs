//! Structural checks over the shipped example models: parsing succeeds, the
//! validator is silent, and the graph accessors return the declared orders
//! that the module allocator depends on.

use std::collections::BTreeMap;
use std::path::PathBuf;

use admc_core::{parse_activity_file, validate, Activity, NodeKind, Value};
use num_rational::BigRational;

fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
}

fn load(name: &str) -> admc_core::ActivityFile {
    let text = std::fs::read_to_string(fixture_path(name)).unwrap();
    match parse_activity_file(name, &text) {
        Ok(f) => f,
        Err(errs) => panic!(
            "{name} failed to parse:\n{}",
            errs.iter().map(|e| e.to_string()).collect::<Vec<_>>().join("\n")
        ),
    }
}

const ALL_FIXTURES: &[&str] = &[
    "sd.adl", "fp.adl", "pal.adl", "tm.adl", "tw.adl", "is.adl", "dc.adl",
];

#[test]
fn all_fixtures_parse_and_validate_cleanly() {
    for name in ALL_FIXTURES {
        let file = load(name);
        let violations = validate(&file);
        assert!(
            violations.is_empty(),
            "{name}: unexpected violations: {:?}",
            violations.iter().map(|v| v.to_string()).collect::<Vec<_>>()
        );
    }
}

fn edge_names(edges: Vec<&admc_core::Edge>) -> Vec<&str> {
    edges.iter().map(|e| e.name.as_str()).collect()
}

fn pal() -> admc_core::ActivityFile {
    load("pal.adl")
}

#[test]
fn pal_counts_and_groups() {
    let file = pal();
    let act = file.activity("PAL").expect("PAL activity");
    assert_eq!(act.parameters.len(), 20);
    assert_eq!(act.nodes.len(), 27);
    assert_eq!(act.edges.len(), 33);
    assert_eq!(act.property_groups.len(), 3);
    assert_eq!(act.to_be_verified.as_deref(), Some("PAL_ctmc"));

    let group = act.property_group("PAL_ctmc").unwrap();
    assert_eq!(group.labels.len(), 4);
    assert_eq!(group.properties.len(), 6);
    assert_eq!(
        group.label("Either delivered"),
        Some("(PAL reaches at PAL::R1DeliveredRoomD) | (PAL reaches at PAL::R2DeliveredRoomD)")
    );
    assert_eq!(
        group.property("either delivered"),
        Some("P=? [F \"Either delivered\"]")
    );
}

#[test]
fn pal_graph_accessors_follow_declaration_order() {
    let file = pal();
    let act = file.activity("PAL").unwrap();

    // The allocator's flow decisions hinge on these orders.
    assert_eq!(edge_names(act.out_edges("F1")), ["E3", "E25"]);
    assert_eq!(edge_names(act.out_edges("D1")), ["E6", "E7"]);
    assert_eq!(edge_names(act.in_edges("M1")), ["E6", "E14", "E16"]);
    assert_eq!(edge_names(act.in_edges("M2")), ["E17", "E18"]);
    assert_eq!(edge_names(act.in_edges("J1")), ["E24", "E32"]);
    assert_eq!(edge_names(act.in_edges("M4")), ["E10", "E23"]);
    assert_eq!(edge_names(act.out_edges("AF")), Vec::<&str>::new());

    let initials: Vec<&str> = act.initial_nodes().iter().map(|n| n.name.as_str()).collect();
    assert_eq!(initials, ["I0"]);

    assert_eq!(act.node("F1").unwrap().kind, NodeKind::Fork);
    assert_eq!(act.node("J1").unwrap().kind, NodeKind::Join);
    assert_eq!(act.node("M3").unwrap().kind, NodeKind::Merge);
    assert_eq!(act.node("D5").unwrap().kind, NodeKind::Decision);
    assert_eq!(act.node("AF").unwrap().kind, NodeKind::ActivityFinal);
    assert_eq!(act.node("Prepare").unwrap().kind, NodeKind::OpaqueAction);
}

#[test]
fn pal_annotations_and_defaults() {
    let file = pal();
    let act = file.activity("PAL").unwrap();

    let prepare = act.node("Prepare").unwrap();
    assert!(prepare.reliability.is_some());
    assert!(prepare.duration.is_some());
    assert!(prepare.rate.is_none());

    // The two door-crossing edges carry the attempt-counting reward.
    let e13 = act.edge("E13").unwrap();
    assert_eq!(e13.rewards.len(), 1);
    assert_eq!(e13.rewards[0].0, "rwd_door12_attempt");

    let env = act.default_env();
    assert_eq!(
        env.get("r_prep"),
        Some(&Value::Num(BigRational::new(4999.into(), 5000.into())))
    );
    assert_eq!(
        env.get("d_door_cd"),
        Some(&Value::Num(BigRational::new(5.into(), 2.into())))
    );
    // Open parameters stay absent so range checks over them are deferred.
    assert!(!env.contains_key("p_c_a"));
    assert!(!env.contains_key("p_c_b"));

    let mut with_p = env.clone();
    with_p.insert(
        "p_c_a".to_string(),
        Value::Num(BigRational::new(1.into(), 2.into())),
    );
    let e7 = act.edge("E7").unwrap();
    let p = e7.prob.as_ref().unwrap().eval(&with_p).unwrap();
    assert_eq!(p, Value::Num(BigRational::new(1.into(), 2.into())));
}

#[test]
fn sd_structure() {
    let file = load("sd.adl");
    let act = file.activity("Six_dice").unwrap();
    assert_eq!(act.nodes.len(), 25);
    assert_eq!(act.edges.len(), 31);

    // Every toss accrues one flip of reward.
    for i in 0..=6 {
        let toss = act.node(&format!("Toss{i}")).unwrap();
        assert_eq!(toss.rewards.len(), 1, "Toss{i}");
        assert_eq!(toss.rewards[0].0, "reward_flip");
    }
    let group = act.property_group("sd_dtmc").unwrap();
    assert_eq!(group.properties.len(), 7);
    assert_eq!(
        group.property("expected flips"),
        Some("R{\"reward_flip\"}=? [F Six_dice reaches at Six_dice::F0]")
    );
    // The die loops back through the merges.
    assert_eq!(edge_names(act.in_edges("M1")), ["E3", "E14"]);
    assert_eq!(edge_names(act.in_edges("M2")), ["E4", "E23"]);
    assert_eq!(edge_names(act.in_edges("M0")), ["E25", "E26", "E27", "E28", "E29", "E30"]);
}

#[test]
fn tm_structure() {
    let file = load("tm.adl");
    let act = file.activity("TM").unwrap();
    assert_eq!(act.nodes.len(), 13);
    assert_eq!(act.edges.len(), 13);
    assert_eq!(act.node("FF1").unwrap().kind, NodeKind::FlowFinal);
    assert_eq!(edge_names(act.out_edges("F1")), ["E9", "E12"]);
    assert_eq!(edge_names(act.in_edges("M1")), ["E2", "E5"]);
    // Every action is timed, so the ctmc group is admissible.
    for node in &act.nodes {
        if node.kind == NodeKind::OpaqueAction {
            assert!(node.duration.is_some(), "{} lacks a duration", node.name);
        }
    }
}

#[test]
fn dc_structure() {
    let file = load("dc.adl");
    let act = file.activity("dc").unwrap();
    assert_eq!(edge_names(act.in_edges("J1")), ["E7", "E10"]);
    assert_eq!(edge_names(act.out_edges("J1")), ["E11"]);
    assert_eq!(edge_names(act.out_edges("F1")), ["E3", "E9"]);
    assert_eq!(edge_names(act.in_edges("M1")), ["E4", "E8"]);
}

#[test]
fn rate_annotated_fixtures() {
    for (name, act_name) in [("tw.adl", "TW"), ("is.adl", "IS")] {
        let file = load(name);
        let act = file.activity(act_name).unwrap();
        for node in &act.nodes {
            if node.kind == NodeKind::OpaqueAction {
                assert!(node.rate.is_some(), "{name}: {} lacks a rate", node.name);
                assert!(node.duration.is_none());
            }
        }
    }
    let file = load("tw.adl");
    let act = file.activity("TW").unwrap();
    let env = act.default_env();
    assert_eq!(
        env.get("p1"),
        Some(&Value::Num(BigRational::new(793257.into(), 1000000.into())))
    );
}

#[test]
fn fp_parameters_are_all_open() {
    let file = load("fp.adl");
    let act = file.activity("FP").unwrap();
    assert_eq!(act.parameters.len(), 11);
    assert_eq!(act.default_env(), BTreeMap::new());
    for e in &act.edges {
        if let Some(p) = &e.prob {
            // Probabilities reference only declared parameters.
            for param in p.free_params() {
                assert!(act.parameter(&param).is_some(), "unknown parameter {param}");
            }
        }
    }
}

#[test]
fn multiple_activities_in_one_file() {
    let text = r#"
activity first() {
    initial i;
    action a;
    final f;
    edge e1: i -> a;
    edge e2: a -> f;
}
activity second() {
    initial i;
    final f;
    edge e1: i -> f;
}
"#;
    let file = parse_activity_file("two.adl", text).unwrap();
    assert_eq!(file.activities.len(), 2);
    assert!(file.activity("first").is_some());
    assert!(file.activity("second").is_some());
    assert!(file.activity("third").is_none());
}

#[test]
fn accessors_on_missing_names_return_none() {
    let file = pal();
    let act: &Activity = file.activity("PAL").unwrap();
    assert!(act.node("NoSuchNode").is_none());
    assert!(act.edge("E99").is_none());
    assert!(act.parameter("nope").is_none());
    assert!(act.property_group("nope").is_none());
}
