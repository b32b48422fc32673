//! Round-trip guarantees of the textual format: `parse ∘ render` is the
//! identity on ASTs and `render ∘ parse` is idempotent on text, both for
//! the shipped fixtures and for randomly generated activities.

use std::path::PathBuf;

use admc_core::activity::{
    Activity, ActivityFile, Edge, Guard, ModelType, Node, NodeKind, Parameter, ParamType,
    PropertyGroup,
};
use admc_core::{parse_activity_file, render_activity_file, Expr};
use num_bigint::BigInt;
use num_rational::BigRational;
use proptest::prelude::*;

fn fixture(name: &str) -> String {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name);
    std::fs::read_to_string(p).unwrap()
}

#[test]
fn fixtures_roundtrip() {
    for name in ["sd.adl", "fp.adl", "pal.adl", "tm.adl", "tw.adl", "is.adl", "dc.adl"] {
        let original = parse_activity_file(name, &fixture(name)).unwrap();
        let rendered = render_activity_file(&original);
        let reparsed = parse_activity_file(name, &rendered)
            .unwrap_or_else(|e| panic!("{name}: canonical form failed to parse: {e:?}"));
        assert_eq!(reparsed, original, "{name}: AST changed across render/parse");
        assert_eq!(
            render_activity_file(&reparsed),
            rendered,
            "{name}: rendering is not idempotent"
        );
    }
}

#[test]
fn comments_are_ignored() {
    let text = "
// leading comment
activity a() { /* inline */
    initial i; // trailing
    final f;
    /* multi
       line */
    edge e1: i -> f;
}
";
    let with = parse_activity_file("a.adl", text).unwrap();
    let without = parse_activity_file(
        "a.adl",
        "activity a() {\n    initial i;\n    final f;\n    edge e1: i -> f;\n}\n",
    )
    .unwrap();
    assert_eq!(with, without);
}

#[test]
fn string_escapes_roundtrip() {
    let text = r#"
activity a() {
    initial i;
    final f;
    edge e1: i -> f;
    properties g: dtmc {
        label "quo\"ted" = "back\\slash";
        "tab\there" = "new\nline";
    }
}
"#;
    let file = parse_activity_file("a.adl", text).unwrap();
    let group = &file.activities[0].property_groups[0];
    assert_eq!(group.labels[0], ("quo\"ted".to_string(), "back\\slash".to_string()));
    assert_eq!(group.properties[0], ("tab\there".to_string(), "new\nline".to_string()));
    let rendered = render_activity_file(&file);
    let reparsed = parse_activity_file("a.adl", &rendered).unwrap();
    assert_eq!(reparsed, file);
}

// ---------------------------------------------------------------------------
// Random activity generation.
// ---------------------------------------------------------------------------

fn arb_real() -> impl Strategy<Value = Expr> {
    (0i64..10_000, 0u32..5).prop_map(|(digits, frac)| {
        Expr::Real(BigRational::new(
            BigInt::from(digits),
            BigInt::from(10u64.pow(frac)),
        ))
    })
}

/// Parameter defaults must evaluate at parse time to a value of the
/// parameter's type, so they are generated from matching literals only.
fn arb_default(ptype: ParamType) -> impl Strategy<Value = Expr> {
    let lit = match ptype {
        ParamType::Real => arb_real().boxed(),
        ParamType::Int => (0i64..100).prop_map(Expr::int).boxed(),
        ParamType::Bool => any::<bool>().prop_map(Expr::Bool).boxed(),
    };
    (lit, any::<bool>()).prop_map(move |(e, neg)| {
        if neg && ptype != ParamType::Bool {
            Expr::Neg(e.into())
        } else {
            e
        }
    })
}

fn arb_numeric_expr() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        arb_real(),
        (0i64..100).prop_map(Expr::int),
        prop_oneof![Just("pa"), Just("pb"), Just("pc")].prop_map(Expr::param),
    ];
    leaf.prop_recursive(3, 16, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Add(a.into(), b.into())),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Sub(a.into(), b.into())),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Mul(a.into(), b.into())),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Div(a.into(), b.into())),
            inner.prop_map(|a| Expr::Neg(a.into())),
        ]
    })
}

fn arb_guard_expr() -> impl Strategy<Value = Expr> {
    use admc_core::CmpOp;
    let cmp = (arb_numeric_expr(), arb_numeric_expr(), prop_oneof![
        Just(CmpOp::Lt),
        Just(CmpOp::Le),
        Just(CmpOp::Gt),
        Just(CmpOp::Ge),
        Just(CmpOp::Eq),
        Just(CmpOp::Ne),
    ])
    .prop_map(|(a, b, op)| Expr::Cmp(op, a.into(), b.into()));
    let leaf = prop_oneof![cmp, any::<bool>().prop_map(Expr::Bool)];
    leaf.prop_recursive(2, 8, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::And(a.into(), b.into())),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Or(a.into(), b.into())),
            inner.prop_map(|a| Expr::Not(a.into())),
        ]
    })
}

fn arb_string() -> impl Strategy<Value = String> {
    // Printable ASCII including quotes and backslashes, plus the escapable
    // control characters.
    proptest::collection::vec(
        prop_oneof![
            proptest::char::range(' ', '~'),
            Just('"'),
            Just('\\'),
            Just('\n'),
            Just('\t'),
        ],
        0..20,
    )
    .prop_map(|cs| cs.into_iter().collect())
}

fn arb_node_kind() -> impl Strategy<Value = NodeKind> {
    prop_oneof![
        Just(NodeKind::Initial),
        Just(NodeKind::ActivityFinal),
        Just(NodeKind::FlowFinal),
        Just(NodeKind::Fork),
        Just(NodeKind::Join),
        Just(NodeKind::Merge),
        Just(NodeKind::Decision),
        Just(NodeKind::OpaqueAction),
    ]
}

fn arb_nodes() -> impl Strategy<Value = Vec<Node>> {
    proptest::collection::vec(
        (
            arb_node_kind(),
            proptest::option::of(arb_numeric_expr()),
            proptest::option::of(arb_numeric_expr()),
            proptest::option::of(arb_numeric_expr()),
            proptest::collection::vec(arb_numeric_expr(), 0..3),
        ),
        1..8,
    )
    .prop_map(|ns| {
        ns.into_iter()
            .enumerate()
            .map(|(i, (kind, reliability, duration, rate, rewards))| {
                // Annotations are a textual feature of action nodes only.
                let action = kind == NodeKind::OpaqueAction;
                Node {
                    name: format!("n{i}"),
                    kind,
                    reliability: reliability.filter(|_| action),
                    duration: duration.filter(|_| action),
                    rate: rate.filter(|_| action),
                    rewards: if action {
                        rewards
                            .into_iter()
                            .enumerate()
                            .map(|(j, e)| (format!("rw{j}"), e))
                            .collect()
                    } else {
                        Vec::new()
                    },
                }
            })
            .collect()
    })
}

fn arb_activity() -> impl Strategy<Value = Activity> {
    let params = proptest::collection::vec(
        prop_oneof![Just(ParamType::Real), Just(ParamType::Int), Just(ParamType::Bool)]
            .prop_flat_map(|ptype| {
                (Just(ptype), proptest::option::of(arb_default(ptype)))
            }),
        0..4,
    )
    .prop_map(|ps| {
        ps.into_iter()
            .enumerate()
            .map(|(i, (ptype, default_value))| Parameter {
                name: format!("pp{i}"),
                ptype,
                default_value,
            })
            .collect::<Vec<_>>()
    });

    (params, arb_nodes()).prop_flat_map(|(parameters, nodes)| {
        let n = nodes.len();
        let edges = proptest::collection::vec(
            (
                0..n,
                0..n,
                proptest::option::of(arb_numeric_expr()),
                proptest::option::of(prop_oneof![
                    Just(Guard::Else),
                    arb_guard_expr().prop_map(Guard::Expr),
                ]),
                proptest::collection::vec(arb_numeric_expr(), 0..2),
            ),
            0..10,
        )
        .prop_map(move |es| {
            es.into_iter()
                .enumerate()
                .map(|(i, (s, t, prob, guard, rewards))| Edge {
                    name: format!("e{i}"),
                    source: format!("n{s}"),
                    target: format!("n{t}"),
                    prob,
                    guard,
                    rewards: rewards
                        .into_iter()
                        .enumerate()
                        .map(|(j, e)| (format!("rw{j}"), e))
                        .collect(),
                })
                .collect::<Vec<_>>()
        });

        let groups = proptest::collection::vec(
            (
                prop_oneof![Just(ModelType::Dtmc), Just(ModelType::Mdp), Just(ModelType::Ctmc)],
                proptest::collection::vec(arb_string(), 0..3),
                proptest::collection::vec(arb_string(), 0..3),
            ),
            0..3,
        )
        .prop_map(|gs| {
            gs.into_iter()
                .enumerate()
                .map(|(i, (model_type, labels, properties))| PropertyGroup {
                    name: format!("g{i}"),
                    model_type,
                    labels: labels
                        .into_iter()
                        .enumerate()
                        .map(|(j, body)| (format!("lbl{j}"), body))
                        .collect(),
                    properties: properties
                        .into_iter()
                        .enumerate()
                        .map(|(j, body)| (format!("prp{j}"), body))
                        .collect(),
                })
                .collect::<Vec<_>>()
        });

        (Just(parameters), Just(nodes), edges, groups, any::<bool>()).prop_map(
            |(parameters, nodes, edges, property_groups, pick_verify)| {
                let to_be_verified = if pick_verify && !property_groups.is_empty() {
                    Some(property_groups[0].name.clone())
                } else {
                    None
                };
                Activity {
                    name: "gen".to_string(),
                    parameters,
                    nodes,
                    edges,
                    property_groups,
                    to_be_verified,
                }
            },
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn random_activities_roundtrip(act in arb_activity()) {
        let file = ActivityFile { activities: vec![act] };
        let rendered = render_activity_file(&file);
        let reparsed = parse_activity_file("gen.adl", &rendered)
            .unwrap_or_else(|e| panic!("canonical form failed to parse: {e:?}\n---\n{rendered}"));
        prop_assert_eq!(&reparsed, &file, "render/parse changed the AST\n---\n{}", rendered);
        prop_assert_eq!(render_activity_file(&reparsed), rendered);
    }
}
