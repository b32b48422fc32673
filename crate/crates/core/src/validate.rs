//! Static well-formedness checks for activity diagrams, plus sanity checks
//! over property texts (activity names, `reaches at` node names, and the
//! `verify` target).
//!
//! Violations are data, not failures: callers decide whether to abort.
//! Checks over open parameter expressions that cannot be decided statically
//! (reliability/probability ranges, probability sums depending on parameter
//! values) are skipped here and re-checked numerically when a model is built
//! with concrete constants.

use std::collections::BTreeMap;
use std::fmt;

use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::activity::{Activity, ActivityFile, Edge, Guard, ModelType, Node, NodeKind};
use crate::expr::{Expr, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViolationCode {
    Wfc1,
    Wfc2,
    Wfc3,
    Wfc4,
    Wfc5,
    Wfc6,
    Wfc7,
    Wfc8,
    Wfc9,
    Wfc10,
    PropName,
    PropNode,
    GroupMissing,
}

impl fmt::Display for ViolationCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ViolationCode::Wfc1 => "WFC1",
            ViolationCode::Wfc2 => "WFC2",
            ViolationCode::Wfc3 => "WFC3",
            ViolationCode::Wfc4 => "WFC4",
            ViolationCode::Wfc5 => "WFC5",
            ViolationCode::Wfc6 => "WFC6",
            ViolationCode::Wfc7 => "WFC7",
            ViolationCode::Wfc8 => "WFC8",
            ViolationCode::Wfc9 => "WFC9",
            ViolationCode::Wfc10 => "WFC10",
            ViolationCode::PropName => "PROP_NAME",
            ViolationCode::PropNode => "PROP_NODE",
            ViolationCode::GroupMissing => "GROUP_MISSING",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub code: ViolationCode,
    /// Name of the node/edge/property the violation is about.
    pub subject: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}: {}", self.code, self.subject, self.message)
    }
}

/// Runs every check on every activity; the empty result means the file is
/// well-formed. Violation order follows the declaration order of their
/// subjects.
pub fn validate(file: &ActivityFile) -> Vec<Violation> {
    let mut out = Vec::new();
    for act in &file.activities {
        validate_activity(act, &mut out);
    }
    out
}

fn validate_activity(act: &Activity, out: &mut Vec<Violation>) {
    let env = act.default_env();
    let has_ctmc_group = act
        .property_groups
        .iter()
        .any(|g| g.model_type == ModelType::Ctmc);

    // wfc-1: unique, non-empty node and edge names.
    let mut seen = BTreeMap::new();
    for (i, n) in act.nodes.iter().enumerate() {
        if n.name.is_empty() {
            out.push(violation(
                ViolationCode::Wfc1,
                "<unnamed>",
                "node without a name".to_string(),
            ));
        } else if let Some(_first) = seen.insert(n.name.clone(), i) {
            out.push(violation(
                ViolationCode::Wfc1,
                &n.name,
                format!("node name `{}` declared more than once", n.name),
            ));
        }
    }
    let mut seen = BTreeMap::new();
    for (i, e) in act.edges.iter().enumerate() {
        if e.name.is_empty() {
            out.push(violation(
                ViolationCode::Wfc1,
                "<unnamed>",
                "edge without a name".to_string(),
            ));
        } else if let Some(_first) = seen.insert(e.name.clone(), i) {
            out.push(violation(
                ViolationCode::Wfc1,
                &e.name,
                format!("edge name `{}` declared more than once", e.name),
            ));
        }
    }

    for node in &act.nodes {
        validate_node(act, node, &env, has_ctmc_group, out);
    }
    for edge in &act.edges {
        validate_edge(act, edge, out);
    }
    for node in &act.nodes {
        if node.kind == NodeKind::Decision {
            validate_decision(act, node, &env, out);
        }
    }
    for group in &act.property_groups {
        for (lname, body) in &group.labels {
            check_property_text(act, &format!("label \"{lname}\""), body, out);
        }
        for (pname, body) in &group.properties {
            check_property_text(act, pname, body, out);
        }
    }
    if let Some(target) = &act.to_be_verified {
        if act.property_group(target).is_none() {
            out.push(violation(
                ViolationCode::GroupMissing,
                target,
                format!("`verify` names unknown property group `{target}`"),
            ));
        }
    }
}

fn validate_node(
    act: &Activity,
    node: &Node,
    env: &BTreeMap<String, Value>,
    has_ctmc_group: bool,
    out: &mut Vec<Violation>,
) {
    if node.kind != NodeKind::OpaqueAction {
        return;
    }
    let in_count = act.in_edges(&node.name).len();
    if in_count != 1 {
        out.push(violation(
            ViolationCode::Wfc2,
            &node.name,
            format!("action must have exactly one incoming edge, found {in_count}"),
        ));
    }
    let out_count = act.out_edges(&node.name).len();
    if out_count != 1 {
        out.push(violation(
            ViolationCode::Wfc3,
            &node.name,
            format!("action must have exactly one outgoing edge, found {out_count}"),
        ));
    }
    if let Some(r) = &node.reliability {
        if let Some(v) = eval_if_closed(r, env) {
            match v {
                Value::Num(x) if !x.is_negative_or_above_one() => {}
                Value::Num(x) => out.push(violation(
                    ViolationCode::Wfc5,
                    &node.name,
                    format!("reliability {} is outside [0, 1]", fmt_rat(&x)),
                )),
                Value::Bool(_) => out.push(violation(
                    ViolationCode::Wfc5,
                    &node.name,
                    "reliability must be a number in [0, 1], not a boolean".to_string(),
                )),
            }
        }
    }
    if node.duration.is_some() && node.rate.is_some() {
        out.push(violation(
            ViolationCode::Wfc10,
            &node.name,
            "action carries both a duration and a rate; use one of them".to_string(),
        ));
    } else if has_ctmc_group && node.duration.is_none() && node.rate.is_none() {
        out.push(violation(
            ViolationCode::Wfc10,
            &node.name,
            "action needs a duration or rate to be analysed as a ctmc".to_string(),
        ));
    }
}

fn validate_edge(act: &Activity, edge: &Edge, out: &mut Vec<Violation>) {
    let source_kind = act.node(&edge.source).map(|n| n.kind);
    if edge.prob.is_some() && edge.guard.is_some() {
        out.push(violation(
            ViolationCode::Wfc6,
            &edge.name,
            "edge carries both a probability and a guard".to_string(),
        ));
    }
    if source_kind != Some(NodeKind::Decision) {
        if edge.prob.is_some() {
            out.push(violation(
                ViolationCode::Wfc6,
                &edge.name,
                "probability annotation on an edge whose source is not a decision".to_string(),
            ));
        }
        if edge.guard.is_some() {
            out.push(violation(
                ViolationCode::Wfc6,
                &edge.name,
                "guard annotation on an edge whose source is not a decision".to_string(),
            ));
        }
    }
    if !edge.rewards.is_empty()
        && matches!(source_kind, Some(NodeKind::Decision) | Some(NodeKind::Fork))
    {
        out.push(violation(
            ViolationCode::Wfc4,
            &edge.name,
            format!(
                "rewards are not allowed on edges leaving a {} node",
                source_kind.unwrap().keyword()
            ),
        ));
    }
}

fn validate_decision(
    act: &Activity,
    node: &Node,
    env: &BTreeMap<String, Value>,
    out: &mut Vec<Violation>,
) {
    let edges = act.out_edges(&node.name);
    let n_prob = edges.iter().filter(|e| e.prob.is_some()).count();
    let n_guard = edges.iter().filter(|e| e.guard.is_some()).count();
    let n_plain = edges
        .iter()
        .filter(|e| e.prob.is_none() && e.guard.is_none())
        .count();
    let n_else = edges
        .iter()
        .filter(|e| matches!(e.guard, Some(Guard::Else)))
        .count();

    // wfc-7: all out-edges guarded or all probabilistic. A decision with a
    // single unannotated out-edge is accepted and treated as probability 1.
    if edges.len() >= 2 && !(n_plain == 0 && (n_prob == 0 || n_guard == 0)) {
        out.push(violation(
            ViolationCode::Wfc7,
            &node.name,
            "out-edges of a decision must all be guarded or all carry probabilities".to_string(),
        ));
        return;
    }
    if n_else > 1 {
        out.push(violation(
            ViolationCode::Wfc7,
            &node.name,
            "more than one out-edge uses the `else` guard".to_string(),
        ));
    }

    // wfc-8: each probability in [0, 1] where decidable.
    for e in &edges {
        if let Some(p) = &e.prob {
            if let Some(v) = eval_if_closed(p, env) {
                match v {
                    Value::Num(x) if !x.is_negative_or_above_one() => {}
                    Value::Num(x) => out.push(violation(
                        ViolationCode::Wfc8,
                        &e.name,
                        format!("probability {} is outside [0, 1]", fmt_rat(&x)),
                    )),
                    Value::Bool(_) => out.push(violation(
                        ViolationCode::Wfc8,
                        &e.name,
                        "probability must be a number, not a boolean".to_string(),
                    )),
                }
            }
        }
    }

    // wfc-9: the probabilities must sum to 1. The sum is formed as an exact
    // multivariate polynomial over the open parameters, so complements like
    // p and 1-p pass symbolically; sums that still depend on a parameter are
    // deferred to model-build time.
    if n_prob == edges.len() && !edges.is_empty() {
        let mut sum = Poly::constant(BigRational::zero());
        let mut convertible = true;
        for e in &edges {
            match expr_to_poly(e.prob.as_ref().unwrap()) {
                Some(p) => sum = sum.add(&p),
                None => {
                    convertible = false;
                    break;
                }
            }
        }
        if convertible {
            if let Some(c) = sum.as_constant() {
                if !c.is_one() {
                    out.push(violation(
                        ViolationCode::Wfc9,
                        &node.name,
                        format!(
                            "probabilities on out-edges of `{}` sum to {}, expected 1",
                            node.name,
                            fmt_rat(&c)
                        ),
                    ));
                }
            }
        }
    }
}

trait RangeCheck {
    fn is_negative_or_above_one(&self) -> bool;
}

impl RangeCheck for BigRational {
    fn is_negative_or_above_one(&self) -> bool {
        self < &BigRational::zero() || self > &BigRational::one()
    }
}

fn eval_if_closed(e: &Expr, env: &BTreeMap<String, Value>) -> Option<Value> {
    e.eval(env).ok()
}

fn fmt_rat(r: &BigRational) -> String {
    crate::expr::decimal_digits(r, 12).unwrap_or_else(|| format!("{}/{}", r.numer(), r.denom()))
}

fn violation(code: ViolationCode, subject: &str, message: String) -> Violation {
    Violation { code, subject: subject.to_string(), message }
}

// ---- exact multivariate polynomials for the wfc-9 sum ----

type Monomial = BTreeMap<String, u32>;

#[derive(Debug, Clone, PartialEq)]
struct Poly {
    terms: BTreeMap<Monomial, BigRational>,
}

impl Poly {
    fn constant(c: BigRational) -> Poly {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(Monomial::new(), c);
        }
        Poly { terms }
    }

    fn var(name: &str) -> Poly {
        let mut m = Monomial::new();
        m.insert(name.to_string(), 1);
        let mut terms = BTreeMap::new();
        terms.insert(m, BigRational::one());
        Poly { terms }
    }

    fn add(&self, other: &Poly) -> Poly {
        let mut terms = self.terms.clone();
        for (m, c) in &other.terms {
            let entry = terms.entry(m.clone()).or_insert_with(BigRational::zero);
            *entry += c;
            if entry.is_zero() {
                terms.remove(m);
            }
        }
        Poly { terms }
    }

    fn neg(&self) -> Poly {
        Poly {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect(),
        }
    }

    fn mul(&self, other: &Poly) -> Poly {
        let mut terms: BTreeMap<Monomial, BigRational> = BTreeMap::new();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                let mut m = ma.clone();
                for (v, e) in mb {
                    *m.entry(v.clone()).or_insert(0) += e;
                }
                let entry = terms.entry(m).or_insert_with(BigRational::zero);
                *entry += ca * cb;
            }
        }
        terms.retain(|_, c| !c.is_zero());
        Poly { terms }
    }

    fn scale(&self, c: &BigRational) -> Poly {
        if c.is_zero() {
            return Poly::constant(BigRational::zero());
        }
        Poly {
            terms: self.terms.iter().map(|(m, x)| (m.clone(), x * c)).collect(),
        }
    }

    fn as_constant(&self) -> Option<BigRational> {
        match self.terms.len() {
            0 => Some(BigRational::zero()),
            1 => {
                let (m, c) = self.terms.iter().next().unwrap();
                m.is_empty().then(|| c.clone())
            }
            _ => None,
        }
    }
}

/// Converts an arithmetic expression to a polynomial over its parameters.
/// Division is only folded when the divisor is a non-zero constant; boolean
/// operators and parameter-dependent divisors yield `None`.
fn expr_to_poly(e: &Expr) -> Option<Poly> {
    match e {
        Expr::Real(r) => Some(Poly::constant(r.clone())),
        Expr::Int(n) => Some(Poly::constant(BigRational::from_integer(n.clone()))),
        Expr::Bool(_) => None,
        Expr::Param(name) => Some(Poly::var(name)),
        Expr::Neg(a) => Some(expr_to_poly(a)?.neg()),
        Expr::Add(a, b) => Some(expr_to_poly(a)?.add(&expr_to_poly(b)?)),
        Expr::Sub(a, b) => Some(expr_to_poly(a)?.add(&expr_to_poly(b)?.neg())),
        Expr::Mul(a, b) => Some(expr_to_poly(a)?.mul(&expr_to_poly(b)?)),
        Expr::Div(a, b) => {
            let divisor = expr_to_poly(b)?.as_constant()?;
            if divisor.is_zero() {
                return None;
            }
            Some(expr_to_poly(a)?.scale(&divisor.recip()))
        }
        Expr::Not(_) | Expr::And(..) | Expr::Or(..) | Expr::Cmp(..) => None,
    }
}

// ---- property-text sanity ----

enum PTok {
    Ident(String),
    Sep,
    Qualifier, // "::"
}

/// Tokenizes a property/label body: identifiers, the `::` qualifier, and
/// separators. Quoted substrings are label references and are skipped whole
/// so their contents are never mistaken for atoms.
fn prop_tokens(text: &str) -> Vec<PTok> {
    let mut toks = Vec::new();
    let chars: Vec<char> = text.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            toks.push(PTok::Ident(chars[start..i].iter().collect()));
        } else if c == ':' && chars.get(i + 1) == Some(&':') {
            toks.push(PTok::Qualifier);
            i += 2;
        } else if c == '"' {
            i += 1;
            while i < chars.len() && chars[i] != '"' {
                if chars[i] == '\\' {
                    i += 1;
                }
                i += 1;
            }
            i += 1;
            toks.push(PTok::Sep);
        } else if c.is_whitespace() {
            // Whitespace separates words without breaking phrase adjacency.
            i += 1;
        } else {
            toks.push(PTok::Sep);
            i += 1;
        }
    }
    toks
}

fn ident_at(toks: &[PTok], i: isize) -> Option<&str> {
    if i < 0 {
        return None;
    }
    match toks.get(i as usize) {
        Some(PTok::Ident(s)) => Some(s),
        _ => None,
    }
}

/// Scans one property or label body for controlled-natural-language atoms
/// and checks the activity/node names they use.
fn check_property_text(act: &Activity, subject: &str, body: &str, out: &mut Vec<Violation>) {
    let toks = prop_tokens(body);
    for i in 0..toks.len() {
        let PTok::Ident(word) = &toks[i] else { continue };
        let i = i as isize;
        match word.as_str() {
            "reaches" if ident_at(&toks, i + 1) == Some("at") => {
                let Some(subj_act) = ident_at(&toks, i - 1) else { continue };
                check_activity_name(act, subject, subj_act, out);
                let qualifier = ident_at(&toks, i + 2);
                let has_sep = matches!(toks.get((i + 3) as usize), Some(PTok::Qualifier));
                let node = ident_at(&toks, i + 4);
                if let (Some(q), true, Some(node)) = (qualifier, has_sep, node) {
                    check_activity_name(act, subject, q, out);
                    if act.node(node).is_none() {
                        out.push(violation(
                            ViolationCode::PropNode,
                            subject,
                            format!("`reaches at` refers to unknown node `{node}`"),
                        ));
                    }
                }
            }
            "terminated" => {
                let next = ident_at(&toks, i + 1);
                let is_atom = next == Some("successfully")
                    || (next == Some("on") && ident_at(&toks, i + 2) == Some("fail"));
                if is_atom {
                    if let Some(subj_act) = ident_at(&toks, i - 1) {
                        check_activity_name(act, subject, subj_act, out);
                    }
                }
            }
            "failed" => {
                if let Some(subj_act) = ident_at(&toks, i - 1) {
                    // Only treat `X failed` as an atom when X is not itself
                    // part of a larger phrase such as `on fail`.
                    if subj_act != "on" {
                        check_activity_name(act, subject, subj_act, out);
                    }
                }
            }
            _ => {}
        }
    }
}

fn check_activity_name(act: &Activity, subject: &str, found: &str, out: &mut Vec<Violation>) {
    if found != act.name {
        out.push(violation(
            ViolationCode::PropName,
            subject,
            format!(
                "atom refers to activity `{found}`, but the enclosing activity is `{}`",
                act.name
            ),
        ));
    }
}
