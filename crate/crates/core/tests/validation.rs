//! One minimal violating model per well-formedness condition, plus the
//! property-text sanity checks and the "removing the violator removes its
//! violations" invariant.

use admc_core::activity::{ActivityFile, Edge, Node, NodeKind};
use admc_core::{parse_activity_file, validate, Expr, ViolationCode};

fn parse(text: &str) -> ActivityFile {
    parse_activity_file("test.adl", text).unwrap_or_else(|e| panic!("parse failed: {e:?}"))
}

fn codes(file: &ActivityFile) -> Vec<(ViolationCode, String)> {
    validate(file)
        .into_iter()
        .map(|v| (v.code, v.subject))
        .collect()
}

/// A well-formed skeleton the violating cases are built from.
const CLEAN: &str = "
activity a() {
    initial i;
    action work;
    final f;
    edge e1: i -> work;
    edge e2: work -> f;
}
";

#[test]
fn clean_activity_has_no_violations() {
    assert_eq!(codes(&parse(CLEAN)), vec![]);
}

#[test]
fn duplicate_names_are_rejected_by_the_parser() {
    // Duplicate node/edge names violate the textual format itself.
    let dup_node = "activity a() { initial i; action i; final f; }";
    assert!(parse_activity_file("t.adl", dup_node).is_err());
    let dup_edge = "
activity a() {
    initial i; final f;
    edge e1: i -> f;
    edge e1: i -> f;
}";
    assert!(parse_activity_file("t.adl", dup_edge).is_err());
}

#[test]
fn wfc1_unique_names_on_constructed_files() {
    // Programmatically built models can still carry duplicates; the
    // validator reports them.
    let mut file = parse(CLEAN);
    let act = &mut file.activities[0];
    act.nodes.push(Node::plain("work", NodeKind::OpaqueAction));
    act.edges.push(Edge::plain("e1", "i", "work"));
    let got = codes(&file);
    assert!(got.contains(&(ViolationCode::Wfc1, "work".to_string())), "{got:?}");
    assert!(got.contains(&(ViolationCode::Wfc1, "e1".to_string())), "{got:?}");
}

#[test]
fn wfc2_action_needs_exactly_one_incoming_edge() {
    let text = "
activity a() {
    initial i;
    merge m;
    action work;
    final f;
    edge e1: i -> work;
    edge e2: m -> work;
    edge e3: work -> f;
}";
    let got = codes(&parse(text));
    assert_eq!(got, vec![(ViolationCode::Wfc2, "work".to_string())]);
}

#[test]
fn wfc3_action_needs_exactly_one_outgoing_edge() {
    let text = "
activity a() {
    initial i;
    action work;
    final f;
    flowfinal ff;
    edge e1: i -> work;
    edge e2: work -> f;
    edge e3: work -> ff;
}";
    let got = codes(&parse(text));
    assert_eq!(got, vec![(ViolationCode::Wfc3, "work".to_string())]);
}

#[test]
fn wfc4_no_rewards_on_decision_or_fork_out_edges() {
    let text = "
activity a() {
    initial i;
    decision d;
    action x;
    action y;
    final f;
    fork fk;
    flowfinal ff;
    edge e1: i -> d;
    edge e2: d -> x { prob = 0.5; reward r = 1; };
    edge e3: d -> fk { prob = 0.5; };
    edge e4: x -> f;
    edge e5: fk -> y { reward r = 2; };
    edge e6: y -> ff;
}";
    let got = codes(&parse(text));
    assert_eq!(
        got,
        vec![
            (ViolationCode::Wfc4, "e2".to_string()),
            (ViolationCode::Wfc4, "e5".to_string()),
        ]
    );
}

#[test]
fn wfc5_reliability_range() {
    let closed = "
activity a() {
    initial i;
    action work { reliability = 1.3; };
    final f;
    edge e1: i -> work;
    edge e2: work -> f;
}";
    assert_eq!(codes(&parse(closed)), vec![(ViolationCode::Wfc5, "work".to_string())]);

    // A defaulted parameter makes the expression decidable.
    let defaulted = "
activity a(r: real = 1.2,) {
    initial i;
    action work { reliability = r; };
    final f;
    edge e1: i -> work;
    edge e2: work -> f;
}";
    assert_eq!(codes(&parse(defaulted)), vec![(ViolationCode::Wfc5, "work".to_string())]);

    // An open parameter defers the check to model-build time.
    let open = "
activity a(r: real,) {
    initial i;
    action work { reliability = r; };
    final f;
    edge e1: i -> work;
    edge e2: work -> f;
}";
    assert_eq!(codes(&parse(open)), vec![]);
}

#[test]
fn wfc6_prob_and_guard_placement() {
    let both = "
activity a() {
    initial i;
    decision d;
    action x;
    final f;
    edge e1: i -> d;
    edge e2: d -> x { prob = 1.0; guard = 1 < 2; };
    edge e3: x -> f;
}";
    let got = codes(&parse(both));
    assert!(got.contains(&(ViolationCode::Wfc6, "e2".to_string())), "{got:?}");

    let on_action = "
activity a() {
    initial i;
    action x;
    final f;
    edge e1: i -> x;
    edge e2: x -> f { prob = 1.0; };
}";
    assert_eq!(codes(&parse(on_action)), vec![(ViolationCode::Wfc6, "e2".to_string())]);
}

#[test]
fn wfc7_uniform_annotation_per_decision() {
    let mixed = "
activity a() {
    initial i;
    decision d;
    action x;
    action y;
    final f;
    flowfinal ff;
    edge e1: i -> d;
    edge e2: d -> x { prob = 0.5; };
    edge e3: d -> y { guard = 1 < 2; };
    edge e4: x -> f;
    edge e5: y -> ff;
}";
    let got = codes(&parse(mixed));
    assert_eq!(got, vec![(ViolationCode::Wfc7, "d".to_string())]);

    let two_else = "
activity a() {
    initial i;
    decision d;
    action x;
    action y;
    final f;
    flowfinal ff;
    edge e1: i -> d;
    edge e2: d -> x { guard = else; };
    edge e3: d -> y { guard = else; };
    edge e4: x -> f;
    edge e5: y -> ff;
}";
    let got = codes(&parse(two_else));
    assert_eq!(got, vec![(ViolationCode::Wfc7, "d".to_string())]);

    // A single unannotated out-edge is accepted (treated as probability 1).
    let single = "
activity a() {
    initial i;
    decision d;
    action x;
    final f;
    edge e1: i -> d;
    edge e2: d -> x;
    edge e3: x -> f;
}";
    assert_eq!(codes(&parse(single)), vec![]);
}

#[test]
fn wfc8_probability_range() {
    let text = "
activity a() {
    initial i;
    decision d;
    action x;
    action y;
    final f;
    flowfinal ff;
    edge e1: i -> d;
    edge e2: d -> x { prob = -0.2; };
    edge e3: d -> y { prob = 1.2; };
    edge e4: x -> f;
    edge e5: y -> ff;
}";
    let got = codes(&parse(text));
    assert_eq!(
        got,
        vec![
            (ViolationCode::Wfc8, "e2".to_string()),
            (ViolationCode::Wfc8, "e3".to_string()),
        ]
    );
}

#[test]
fn wfc9_probabilities_sum_to_one() {
    let bad = "
activity a() {
    initial i;
    decision d;
    action x;
    action y;
    final f;
    flowfinal ff;
    edge e1: i -> d;
    edge e2: d -> x { prob = 0.6; };
    edge e3: d -> y { prob = 0.6; };
    edge e4: x -> f;
    edge e5: y -> ff;
}";
    assert_eq!(codes(&parse(bad)), vec![(ViolationCode::Wfc9, "d".to_string())]);

    // Complementary symbolic probabilities cancel exactly.
    let symbolic = "
activity a(p: real, q: real,) {
    initial i;
    decision d;
    action x;
    action y;
    action z;
    final f;
    flowfinal ff;
    flowfinal ff2;
    edge e1: i -> d;
    edge e2: d -> x { prob = p * q; };
    edge e3: d -> y { prob = (1 - p) * q; };
    edge e4: d -> z { prob = 1 - q; };
    edge e5: x -> f;
    edge e6: y -> ff;
    edge e7: z -> ff2;
}";
    assert_eq!(codes(&parse(symbolic)), vec![]);

    // A sum that still depends on a parameter is deferred, not flagged.
    let open = "
activity a(p: real, q: real,) {
    initial i;
    decision d;
    action x;
    action y;
    final f;
    flowfinal ff;
    edge e1: i -> d;
    edge e2: d -> x { prob = p; };
    edge e3: d -> y { prob = 1 - q; };
    edge e4: x -> f;
    edge e5: y -> ff;
}";
    assert_eq!(codes(&parse(open)), vec![]);
}

#[test]
fn wfc10_timing_annotations() {
    let both = "
activity a() {
    initial i;
    action work { duration = 1.0; rate = 2.0; };
    final f;
    edge e1: i -> work;
    edge e2: work -> f;
}";
    assert_eq!(codes(&parse(both)), vec![(ViolationCode::Wfc10, "work".to_string())]);

    // Missing timing is only a problem when a ctmc analysis is requested.
    let missing_no_ctmc = "
activity a() {
    initial i;
    action work;
    final f;
    edge e1: i -> work;
    edge e2: work -> f;
    properties g: dtmc {
        \"p\" = \"P=? [F a reaches at a::f]\";
    }
}";
    assert_eq!(codes(&parse(missing_no_ctmc)), vec![]);

    let missing_ctmc = "
activity a() {
    initial i;
    action work;
    final f;
    edge e1: i -> work;
    edge e2: work -> f;
    properties g: ctmc {
        \"p\" = \"P=? [F<=1 a reaches at a::f]\";
    }
}";
    assert_eq!(codes(&parse(missing_ctmc)), vec![(ViolationCode::Wfc10, "work".to_string())]);
}

#[test]
fn property_texts_are_sanity_checked() {
    let wrong_activity = "
activity a() {
    initial i;
    final f;
    edge e1: i -> f;
    properties g: dtmc {
        \"p\" = \"P=? [F other reaches at other::f]\";
    }
}";
    // Both the subject and the `other::` qualifier name the wrong activity.
    let got = codes(&parse(wrong_activity));
    assert_eq!(
        got,
        vec![
            (ViolationCode::PropName, "p".to_string()),
            (ViolationCode::PropName, "p".to_string()),
        ]
    );

    let wrong_node = "
activity a() {
    initial i;
    final f;
    edge e1: i -> f;
    properties g: dtmc {
        label \"done\" = \"a reaches at a::nowhere\";
        \"p\" = \"P=? [F \\\"done\\\"]\";
    }
}";
    let got = codes(&parse(wrong_node));
    assert_eq!(got, vec![(ViolationCode::PropNode, "label \"done\"".to_string())]);
}

#[test]
fn verify_must_name_an_existing_group() {
    // The parser already rejects this in text; constructed ASTs go through
    // the validator.
    let mut file = parse(CLEAN);
    file.activities[0].to_be_verified = Some("ghost".to_string());
    assert_eq!(codes(&file), vec![(ViolationCode::GroupMissing, "ghost".to_string())]);
}

#[test]
fn removing_the_violator_removes_its_violations() {
    let text = "
activity a() {
    initial i;
    action work { reliability = 1.3; };
    action loose;
    final f;
    edge e1: i -> work;
    edge e2: work -> f;
}";
    let mut file = parse(text);
    let before = validate(&file);
    assert_eq!(before.len(), 3); // Wfc5 on work, Wfc2+Wfc3 on the unconnected action.
    assert!(before.iter().any(|v| v.subject == "work" && v.code == ViolationCode::Wfc5));

    // Dropping the reliability annotation removes exactly the Wfc5 finding.
    file.activities[0]
        .nodes
        .iter_mut()
        .find(|n| n.name == "work")
        .unwrap()
        .reliability = None;
    let after = validate(&file);
    assert_eq!(after.len(), 2);
    assert!(after.iter().all(|v| v.subject == "loose"));
}

#[test]
fn validator_is_deterministic() {
    let text = "
activity a() {
    initial i;
    action work { reliability = 1.3; duration = 1.0; rate = 1.0; };
    final f;
    edge e1: i -> work;
    edge e2: work -> f;
}";
    let file = parse(text);
    let a = validate(&file);
    let b = validate(&file);
    assert_eq!(a, b);
    assert!(!a.is_empty());
}

#[test]
fn violations_display_as_code_subject_message() {
    let text = "
activity a() {
    initial i;
    action work { reliability = 1.3; };
    final f;
    edge e1: i -> work;
    edge e2: work -> f;
}";
    let v = validate(&parse(text));
    let line = v[0].to_string();
    assert!(line.starts_with("WFC5 work: "), "{line}");
    assert!(line.contains("1.3"), "{line}");
}

#[test]
fn reliability_expression_over_defaults_is_checked() {
    // Expressions combining defaulted parameters evaluate exactly.
    let text = "
activity a(r: real = 0.7,) {
    initial i;
    action work { reliability = r * 2; };
    final f;
    edge e1: i -> work;
    edge e2: work -> f;
}";
    assert_eq!(codes(&parse(text)), vec![(ViolationCode::Wfc5, "work".to_string())]);
}

#[test]
fn boolean_probability_is_flagged() {
    let text = "
activity a() {
    initial i;
    decision d;
    action x;
    action y;
    final f;
    flowfinal ff;
    edge e1: i -> d;
    edge e2: d -> x { prob = true; };
    edge e3: d -> y { prob = false; };
    edge e4: x -> f;
    edge e5: y -> ff;
}";
    let got = codes(&parse(text));
    assert_eq!(
        got,
        vec![
            (ViolationCode::Wfc8, "e2".to_string()),
            (ViolationCode::Wfc8, "e3".to_string()),
        ]
    );
}
