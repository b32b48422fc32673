//! Shared helpers: load fixtures, bind constants, and run the full
//! activity → PRISM text → parse → explicit-model pipeline the way the
//! command-line tool does.
#![allow(dead_code)] // each test binary uses a different subset

use std::collections::BTreeMap;
use std::path::PathBuf;

use admc_core::{parse_activity_file, rational_from_decimal_str, Activity, Value};
use admc_engine::{build, ExplicitModel};
use admc_prism::props::{resolve_group, ResolvedGroup};
use admc_prism::{emit_model, parse_model, preprocess, transform, GenOptions, PrismModel};

pub fn fixture(name: &str) -> String {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name);
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("read {}: {e}", path.display()))
}

/// Parses `name=value` constant bindings: booleans, integers, or decimals.
pub fn consts(pairs: &[(&str, &str)]) -> BTreeMap<String, Value> {
    pairs
        .iter()
        .map(|(name, val)| {
            let v = match *val {
                "true" => Value::Bool(true),
                "false" => Value::Bool(false),
                s => Value::Num(
                    rational_from_decimal_str(s)
                        .unwrap_or_else(|| panic!("bad constant literal {s}")),
                ),
            };
            (name.to_string(), v)
        })
        .collect()
}

pub fn build_prism_text(src: &str, bindings: &BTreeMap<String, Value>) -> ExplicitModel {
    let model = parse_model(src).expect("model parses");
    build(&model, bindings).expect("model builds")
}

pub fn load_activity(file: &str) -> Activity {
    let text = fixture(file);
    let af = parse_activity_file(file, &text).expect("fixture parses");
    af.activities.into_iter().next().expect("fixture has an activity")
}

/// Generates the PRISM model for one property group of an activity file and
/// resolves the group's properties against it, going through emitted text
/// and the parser so the engine sees exactly what a user would.
pub fn compile_group(
    file: &str,
    group_name: &str,
    mean_duration: Option<&str>,
) -> (PrismModel, ResolvedGroup) {
    let act = load_activity(file);
    let group = act
        .property_groups
        .iter()
        .find(|g| g.name == group_name)
        .unwrap_or_else(|| panic!("{file} has no group {group_name}"))
        .clone();
    let mm = preprocess(&act);
    let mut opts = GenOptions::default();
    if let Some(md) = mean_duration {
        opts.mean_duration = rational_from_decimal_str(md).expect("mean duration literal");
    }
    let model = transform(&act, &mm, group.model_type, &opts).expect("transform");
    let text = emit_model(&model).expect("emit");
    let parsed = parse_model(&text).expect("emitted text re-parses");
    let resolved = resolve_group(&act, &mm, &group).expect("properties resolve");
    (parsed, resolved)
}

pub fn build_group(
    file: &str,
    group_name: &str,
    mean_duration: Option<&str>,
    bindings: &BTreeMap<String, Value>,
) -> (ExplicitModel, ResolvedGroup) {
    let (model, resolved) = compile_group(file, group_name, mean_duration);
    let em = build(&model, bindings).expect("explicit model builds");
    (em, resolved)
}
