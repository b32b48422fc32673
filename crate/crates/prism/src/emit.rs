//! Deterministic text rendering for [`PrismModel`].
//!
//! The layout is fixed — model type, constants, formulas, reward structures,
//! modules — so that identical models always serialize to identical bytes.
//! Qualified names (`A::B::pc`) are mangled to flat identifiers (`A_B_pc`) at
//! the boundary, with an injectivity check so two distinct internal names can
//! never collapse onto the same output identifier.
//!
//! Expression rendering is deliberately paren-heavy: every literal and every
//! binary operation wraps itself, which keeps the output unambiguous without
//! tracking operator precedence and makes re-parsing trivially faithful.

use admc_core::activity::ModelType;
use admc_core::expr::fmt_real;

use crate::ast::{
    check_mangling, mangle_name, Command, ConstantDecl, Formula, NameError, PExpr, PrismModel,
    PrismModule, RewardStruct, Update, VarDecl, VarType,
};

/// Renders an expression in self-parenthesizing form: numeric literals and
/// binary operations come out wrapped, identifiers and boolean literals bare.
pub fn render_expr(e: &PExpr) -> String {
    match e {
        PExpr::Int(i) => format!("({})", i),
        PExpr::Real(r) => format!("({})", fmt_real(r)),
        PExpr::Bool(b) => b.to_string(),
        PExpr::Ident(name) => name.clone(),
        PExpr::Neg(inner) => format!("(-{})", render_expr(inner)),
        PExpr::Not(inner) => format!("(!{})", paren_wrap(inner)),
        PExpr::Bin(op, a, b) => {
            format!("({}{}{})", render_expr(a), op.symbol(), render_expr(b))
        }
    }
}

/// Like [`render_expr`] but guarantees an outer pair of parentheses, for
/// contexts (negation bodies) where bare identifiers would be ambiguous.
fn paren_wrap(e: &PExpr) -> String {
    let s = render_expr(e);
    if s.starts_with('(') {
        s
    } else {
        format!("({})", s)
    }
}

/// One conjunct inside a guard: conjunctions flatten recursively, negations
/// render as `!(...)`, everything else falls back to expression form.
fn render_conjunct_inner(e: &PExpr) -> String {
    match e {
        PExpr::Bin(crate::ast::PBinOp::And, a, b) => {
            format!("({})&({})", render_conjunct_inner(a), render_conjunct_inner(b))
        }
        PExpr::Not(inner) => format!("!{}", paren_wrap(inner)),
        PExpr::Ident(name) => name.clone(),
        PExpr::Bool(b) => b.to_string(),
        other => render_expr(other),
    }
}

/// Renders a guard conjunct list. A single bare identifier or boolean stays
/// bare; otherwise each conjunct is parenthesized and the list is joined
/// with `&`.
pub fn render_guard(conjuncts: &[PExpr]) -> String {
    if conjuncts.is_empty() {
        return "true".to_string();
    }
    if conjuncts.len() == 1 {
        if let PExpr::Ident(name) = &conjuncts[0] {
            return name.clone();
        }
        if let PExpr::Bool(b) = &conjuncts[0] {
            return b.to_string();
        }
    }
    conjuncts
        .iter()
        .map(|c| format!("({})", render_conjunct_inner(c)))
        .collect::<Vec<_>>()
        .join("&")
}

/// Right-hand side of an assignment: identifiers and booleans bare, the rest
/// in expression form.
fn render_rhs(e: &PExpr) -> String {
    match e {
        PExpr::Ident(name) => name.clone(),
        PExpr::Bool(b) => b.to_string(),
        other => render_expr(other),
    }
}

fn render_update(u: &Update) -> String {
    let body = if u.assigns.is_empty() {
        "true".to_string()
    } else {
        u.assigns
            .iter()
            .map(|(var, rhs)| format!("({}'={})", var, render_rhs(rhs)))
            .collect::<Vec<_>>()
            .join("&")
    };
    match &u.weight {
        Some(w) => format!("{}:{}", render_weight(w), body),
        None => body,
    }
}

/// Update weights render like assignment right-hand sides: a bare identifier
/// (`default_rate`) stays bare, composite expressions self-parenthesize.
fn render_weight(w: &PExpr) -> String {
    render_rhs(w)
}

pub fn render_command(c: &Command) -> String {
    let label = c.action.as_deref().unwrap_or("");
    let updates = c
        .updates
        .iter()
        .map(render_update)
        .collect::<Vec<_>>()
        .join(" + ");
    format!("[{}] {} -> {};", label, render_guard(&c.guard), updates)
}

fn render_plain_value(e: &PExpr) -> String {
    match e {
        PExpr::Int(i) => i.to_string(),
        PExpr::Real(r) => fmt_real(r),
        PExpr::Bool(b) => b.to_string(),
        PExpr::Ident(name) => name.clone(),
        PExpr::Neg(inner) => format!("-{}", render_plain_value(inner)),
        other => render_expr(other),
    }
}

fn render_var_decl(v: &VarDecl) -> String {
    match &v.vtype {
        VarType::Bool => format!("{} : bool init {};", v.name, render_plain_value(&v.init)),
        VarType::IntRange { lo, hi } => format!(
            "{} : [{}..{}] init {};",
            v.name,
            render_plain_value(lo),
            render_plain_value(hi),
            render_plain_value(&v.init)
        ),
    }
}

fn render_constant(c: &ConstantDecl) -> String {
    match &c.value {
        Some(v) => format!("const {} {} = {};", c.ctype.keyword(), c.name, render_rhs(v)),
        None => format!("const {} {};", c.ctype.keyword(), c.name),
    }
}

fn render_formula(f: &Formula) -> String {
    let body = match f.disjuncts.len() {
        0 => "false".to_string(),
        1 => render_rhs(&f.disjuncts[0]),
        _ => f
            .disjuncts
            .iter()
            .map(|d| format!("({})", render_rhs(d)))
            .collect::<Vec<_>>()
            .join(" | "),
    };
    format!("formula {} = {};", f.name, body)
}

fn render_reward_struct(r: &RewardStruct, out: &mut String) {
    out.push_str(&format!("rewards \"{}\"\n", r.name));
    for item in &r.items {
        out.push_str(&format!(
            "  [{}] {} : {};\n",
            item.action,
            render_guard(&item.guard),
            render_rhs(&item.value)
        ));
    }
    out.push_str("endrewards\n");
}

fn render_module(m: &PrismModule, out: &mut String) {
    out.push_str(&format!("module {}\n", m.name));
    for v in &m.vars {
        out.push_str("  ");
        out.push_str(&render_var_decl(v));
        out.push('\n');
    }
    for c in &m.commands {
        out.push_str("  ");
        out.push_str(&render_command(c));
        out.push('\n');
    }
    out.push_str("endmodule\n");
}

/// Applies the name mangling to every identifier in the model.
fn mangle_model(model: &PrismModel) -> PrismModel {
    fn me(e: &PExpr) -> PExpr {
        match e {
            PExpr::Ident(name) => PExpr::Ident(mangle_name(name)),
            PExpr::Not(inner) => PExpr::Not(Box::new(me(inner))),
            PExpr::Neg(inner) => PExpr::Neg(Box::new(me(inner))),
            PExpr::Bin(op, a, b) => PExpr::Bin(*op, Box::new(me(a)), Box::new(me(b))),
            lit => lit.clone(),
        }
    }
    PrismModel {
        model_type: model.model_type,
        constants: model
            .constants
            .iter()
            .map(|c| ConstantDecl {
                name: mangle_name(&c.name),
                ctype: c.ctype,
                value: c.value.as_ref().map(me),
            })
            .collect(),
        globals: model
            .globals
            .iter()
            .map(|v| mangle_var(v, &me))
            .collect(),
        formulas: model
            .formulas
            .iter()
            .map(|f| Formula {
                name: mangle_name(&f.name),
                disjuncts: f.disjuncts.iter().map(me).collect(),
            })
            .collect(),
        reward_structs: model
            .reward_structs
            .iter()
            .map(|r| RewardStruct {
                name: r.name.clone(),
                items: r
                    .items
                    .iter()
                    .map(|item| crate::ast::RewardItem {
                        action: mangle_name(&item.action),
                        guard: item.guard.iter().map(me).collect(),
                        value: me(&item.value),
                    })
                    .collect(),
            })
            .collect(),
        modules: model
            .modules
            .iter()
            .map(|m| PrismModule {
                name: mangle_name(&m.name),
                vars: m.vars.iter().map(|v| mangle_var(v, &me)).collect(),
                commands: m
                    .commands
                    .iter()
                    .map(|c| Command {
                        action: c.action.as_deref().map(mangle_name),
                        guard: c.guard.iter().map(me).collect(),
                        updates: c
                            .updates
                            .iter()
                            .map(|u| Update {
                                weight: u.weight.as_ref().map(me),
                                assigns: u
                                    .assigns
                                    .iter()
                                    .map(|(v, rhs)| (mangle_name(v), me(rhs)))
                                    .collect(),
                            })
                            .collect(),
                    })
                    .collect(),
            })
            .collect(),
    }
}

fn mangle_var(v: &VarDecl, me: &dyn Fn(&PExpr) -> PExpr) -> VarDecl {
    VarDecl {
        name: mangle_name(&v.name),
        vtype: match &v.vtype {
            VarType::Bool => VarType::Bool,
            VarType::IntRange { lo, hi } => VarType::IntRange {
                lo: me(lo),
                hi: me(hi),
            },
        },
        init: me(&v.init),
    }
}

/// Serializes a model to PRISM text. Names are mangled (`::` → `_`) after an
/// injectivity check.
pub fn emit_model(model: &PrismModel) -> Result<String, NameError> {
    check_mangling(model)?;
    let model = mangle_model(model);
    let mut out = String::new();
    out.push_str(match model.model_type {
        ModelType::Dtmc => "dtmc",
        ModelType::Mdp => "mdp",
        ModelType::Ctmc => "ctmc",
    });
    out.push('\n');
    if !model.constants.is_empty() {
        out.push('\n');
        for c in &model.constants {
            out.push_str(&render_constant(c));
            out.push('\n');
        }
    }
    if !model.globals.is_empty() {
        out.push('\n');
        for g in &model.globals {
            out.push_str("global ");
            out.push_str(&render_var_decl(g));
            out.push('\n');
        }
    }
    if !model.formulas.is_empty() {
        out.push('\n');
        for f in &model.formulas {
            out.push_str(&render_formula(f));
            out.push('\n');
        }
    }
    for r in &model.reward_structs {
        out.push('\n');
        render_reward_struct(r, &mut out);
    }
    for m in &model.modules {
        out.push('\n');
        render_module(m, &mut out);
    }
    Ok(out)
}
