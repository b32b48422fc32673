//! Explicit-state model construction: expands a parsed PRISM model into the
//! reachable state graph under the composition semantics of the subset —
//! unlabeled commands interleave, commands sharing an action label
//! synchronize across every module whose alphabet contains the label
//! (conjoined guards, cross-product updates, multiplied weights).
//!
//! Transition weights are kept as exact rationals; the numeric solvers
//! convert to floating point on demand.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use admc_core::{BigRational, Value};
use admc_prism::ast::{
    Command, ConstType, ModelType, PExpr, PrismModel, PrismModule, RewardStruct, VarType,
};
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

/// Exploration cap; hit it and the model is far outside the tool's desk-scale
/// target.
const MAX_STATES: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BuildError {
    #[error("undefined constant{} {}; supply with --const name=value", if .0.len() == 1 { "" } else { "s" }, .0.join(", "))]
    UndefinedConstants(Vec<String>),
    #[error("constant `{name}` expects {expected}")]
    ConstantType { name: String, expected: &'static str },
    #[error("`{0}` does not name an undefined constant of the model")]
    UnknownConstant(String),
    #[error("formula `{0}` is defined in terms of itself")]
    CyclicFormula(String),
    #[error("duplicate variable `{0}`")]
    DuplicateVariable(String),
    #[error("variable `{name}` has init {init} outside [{lo}..{hi}]")]
    InitOutOfRange { name: String, init: i64, lo: i64, hi: i64 },
    #[error("global variable `{var}` is updated by the synchronizing command [{action}]")]
    GlobalInSync { var: String, action: String },
    #[error("command in module `{module}` updates `{var}`, which belongs to another module")]
    ForeignWrite { module: String, var: String },
    #[error("assignment to `{var}` in state {state} yields {value}, outside [{lo}..{hi}]")]
    RangeViolation { var: String, state: String, value: i64, lo: i64, hi: i64 },
    #[error("update weights of [{action}] in state {state} sum to {sum}, expected 1")]
    BadProbabilitySum { action: String, state: String, sum: String },
    #[error("negative weight on [{action}] in state {state}")]
    NegativeWeight { action: String, state: String },
    #[error("conflicting parallel assignments to `{var}` under [{action}]")]
    WriteConflict { var: String, action: String },
    #[error("evaluation failed in state {state}: {message}")]
    Eval { state: String, message: String },
    #[error("model exceeds {MAX_STATES} reachable states")]
    TooManyStates,
}

/// One explored variable: every variable (boolean included) is stored as an
/// integer slot with inclusive bounds.
#[derive(Debug, Clone)]
pub struct VarInfo {
    pub name: String,
    pub lo: i64,
    pub hi: i64,
    pub init: i64,
    pub is_bool: bool,
}

/// One (possibly synchronized) command instance enabled in a state: the
/// nondeterministic alternative of an MDP, a uniform alternative of a DTMC,
/// or a race participant of a CTMC.
#[derive(Debug, Clone)]
pub struct Choice {
    pub action: Option<String>,
    /// Target state and weight: a probability for dtmc/mdp, a rate for ctmc.
    pub branches: Vec<(usize, BigRational)>,
    /// Transition reward collected when this choice fires, one entry per
    /// reward structure.
    pub rewards: Vec<BigRational>,
}

#[derive(Debug, Clone)]
pub struct ExplicitModel {
    pub model_type: ModelType,
    pub vars: Vec<VarInfo>,
    pub var_index: HashMap<String, usize>,
    pub states: Vec<Vec<i64>>,
    pub initial: usize,
    /// Per-state enabled choices. A ctmc state with no choice is absorbing;
    /// dtmc/mdp deadlocks get an explicit self-loop and are recorded below.
    pub choices: Vec<Vec<Choice>>,
    pub deadlocks: Vec<usize>,
    pub constants: BTreeMap<String, Value>,
    /// Formula definitions, fully expanded to constants and variables, kept
    /// for evaluating property atoms that reference them.
    pub formulas: BTreeMap<String, PExpr>,
    pub reward_names: Vec<String>,
}

impl ExplicitModel {
    pub fn state_count(&self) -> usize {
        self.states.len()
    }

    pub fn transition_count(&self) -> usize {
        self.choices
            .iter()
            .flat_map(|cs| cs.iter())
            .map(|c| c.branches.len())
            .sum()
    }

    pub fn reward_index(&self, name: &str) -> Option<usize> {
        self.reward_names.iter().position(|n| n == name)
    }

    /// Renders a state as `var=value` pairs for diagnostics and exports.
    pub fn render_state(&self, s: usize) -> String {
        self.vars
            .iter()
            .zip(&self.states[s])
            .map(|(v, val)| {
                if v.is_bool {
                    format!("{}={}", v.name, *val != 0)
                } else {
                    format!("{}={}", v.name, val)
                }
            })
            .collect::<Vec<_>>()
            .join(",")
    }

    /// Evaluates a closed boolean expression in a state; identifiers cover
    /// variables, constants, and formula names.
    pub fn state_sat(&self, s: usize, e: &PExpr) -> Result<bool, String> {
        match self.state_eval(s, e)? {
            Value::Bool(b) => Ok(b),
            Value::Num(_) => Err("property atom is numeric, expected boolean".to_string()),
        }
    }

    pub fn state_eval(&self, s: usize, e: &PExpr) -> Result<Value, String> {
        let lookup = self.lookup_fn(s);
        e.eval(&lookup).map_err(|e| e.to_string())
    }

    fn lookup_fn(&self, s: usize) -> impl Fn(&str) -> Option<Value> + '_ {
        move |name: &str| {
            if let Some(&vi) = self.var_index.get(name) {
                let raw = self.states[s][vi];
                return Some(if self.vars[vi].is_bool {
                    Value::Bool(raw != 0)
                } else {
                    Value::Num(BigRational::from_integer(raw.into()))
                });
            }
            if let Some(v) = self.constants.get(name) {
                return Some(v.clone());
            }
            if let Some(f) = self.formulas.get(name) {
                let lookup = self.lookup_fn(s);
                return f.eval(&lookup).ok();
            }
            None
        }
    }
}

/// Builds the reachable explicit model. `consts` supplies values for the
/// model's undefined constants (all of them; missing ones are reported
/// together in one error).
pub fn build(
    model: &PrismModel,
    consts: &BTreeMap<String, Value>,
) -> Result<ExplicitModel, BuildError> {
    let constants = eval_constants(model, consts)?;
    let formulas = expand_formulas(model)?;

    // Substitute formulas into every command expression up front; they never
    // enlarge the state vector.
    let modules: Vec<PrismModule> = model
        .modules
        .iter()
        .map(|m| subst_module(m, &formulas))
        .collect();
    let reward_structs: Vec<RewardStruct> = model
        .reward_structs
        .iter()
        .map(|r| subst_rewards(r, &formulas))
        .collect();

    let const_lookup = |name: &str| constants.get(name).cloned();

    // Variable layout: globals first, then module locals in module order.
    let mut vars: Vec<VarInfo> = Vec::new();
    let mut var_index: HashMap<String, usize> = HashMap::new();
    let mut var_module: Vec<Option<usize>> = Vec::new();
    let add_var =
        |decl: &admc_prism::ast::VarDecl, module: Option<usize>, vars: &mut Vec<VarInfo>,
         var_index: &mut HashMap<String, usize>, var_module: &mut Vec<Option<usize>>|
         -> Result<(), BuildError> {
            if var_index.contains_key(&decl.name) {
                return Err(BuildError::DuplicateVariable(decl.name.clone()));
            }
            let (lo, hi, is_bool) = match &decl.vtype {
                VarType::Bool => (0, 1, true),
                VarType::IntRange { lo, hi } => (
                    eval_int_in(lo, &const_lookup, &decl.name)?,
                    eval_int_in(hi, &const_lookup, &decl.name)?,
                    false,
                ),
            };
            let init = match decl.init.eval(&const_lookup) {
                Ok(Value::Bool(b)) if is_bool => i64::from(b),
                Ok(Value::Num(n)) if !is_bool => rational_to_i64(&n).ok_or(
                    BuildError::ConstantType { name: decl.name.clone(), expected: "an integer" },
                )?,
                _ => {
                    return Err(BuildError::ConstantType {
                        name: decl.name.clone(),
                        expected: if is_bool { "a boolean init" } else { "an integer init" },
                    })
                }
            };
            if init < lo || init > hi {
                return Err(BuildError::InitOutOfRange { name: decl.name.clone(), init, lo, hi });
            }
            var_index.insert(decl.name.clone(), vars.len());
            vars.push(VarInfo { name: decl.name.clone(), lo, hi, init, is_bool });
            var_module.push(module);
            Ok(())
        };
    for g in &model.globals {
        add_var(g, None, &mut vars, &mut var_index, &mut var_module)?;
    }
    for (mi, m) in modules.iter().enumerate() {
        for v in &m.vars {
            add_var(v, Some(mi), &mut vars, &mut var_index, &mut var_module)?;
        }
    }

    // Static write-permission checks: synchronizing commands must not write
    // globals, and no command may write another module's local.
    for (mi, m) in modules.iter().enumerate() {
        for c in &m.commands {
            for u in &c.updates {
                for (var, _) in &u.assigns {
                    let Some(&vi) = var_index.get(var) else {
                        return Err(BuildError::ForeignWrite {
                            module: m.name.clone(),
                            var: var.clone(),
                        });
                    };
                    match var_module[vi] {
                        None => {
                            if let Some(a) = &c.action {
                                return Err(BuildError::GlobalInSync {
                                    var: var.clone(),
                                    action: a.clone(),
                                });
                            }
                        }
                        Some(owner) if owner != mi => {
                            return Err(BuildError::ForeignWrite {
                                module: m.name.clone(),
                                var: var.clone(),
                            });
                        }
                        Some(_) => {}
                    }
                }
            }
        }
    }

    // Synchronization structure: for every action label, the modules whose
    // alphabet contains it.
    let mut label_parts: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for (mi, m) in modules.iter().enumerate() {
        let alphabet: BTreeSet<&String> =
            m.commands.iter().filter_map(|c| c.action.as_ref()).collect();
        for a in alphabet {
            label_parts.entry(a.clone()).or_default().push(mi);
        }
    }

    let reward_names: Vec<String> = reward_structs.iter().map(|r| r.name.clone()).collect();

    let mut builder = Builder {
        model_type: model.model_type,
        vars: &vars,
        var_index: &var_index,
        modules: &modules,
        label_parts: &label_parts,
        reward_structs: &reward_structs,
        constants: &constants,
        states: Vec::new(),
        state_index: HashMap::new(),
        choices: Vec::new(),
        deadlocks: Vec::new(),
    };

    let init_state: Vec<i64> = vars.iter().map(|v| v.init).collect();
    let initial = builder.intern(init_state)?;
    let mut next = 0usize;
    while next < builder.states.len() {
        builder.explore(next)?;
        next += 1;
    }
    let Builder { states, choices, deadlocks, .. } = builder;

    Ok(ExplicitModel {
        model_type: model.model_type,
        vars,
        var_index,
        states,
        initial,
        choices,
        deadlocks,
        constants,
        formulas,
        reward_names,
    })
}

struct Builder<'a> {
    model_type: ModelType,
    vars: &'a [VarInfo],
    var_index: &'a HashMap<String, usize>,
    modules: &'a [PrismModule],
    label_parts: &'a BTreeMap<String, Vec<usize>>,
    reward_structs: &'a [RewardStruct],
    constants: &'a BTreeMap<String, Value>,
    states: Vec<Vec<i64>>,
    state_index: HashMap<Vec<i64>, usize>,
    choices: Vec<Vec<Choice>>,
    deadlocks: Vec<usize>,
}

impl<'a> Builder<'a> {
    fn intern(&mut self, s: Vec<i64>) -> Result<usize, BuildError> {
        if let Some(&i) = self.state_index.get(&s) {
            return Ok(i);
        }
        if self.states.len() >= MAX_STATES {
            return Err(BuildError::TooManyStates);
        }
        let i = self.states.len();
        self.state_index.insert(s.clone(), i);
        self.states.push(s);
        self.choices.push(Vec::new());
        Ok(i)
    }

    fn render_state(&self, s: usize) -> String {
        self.vars
            .iter()
            .zip(&self.states[s])
            .map(|(v, val)| format!("{}={}", v.name, val))
            .collect::<Vec<_>>()
            .join(",")
    }

    fn lookup(&self, s: usize) -> impl Fn(&str) -> Option<Value> + '_ {
        let state = &self.states[s];
        move |name: &str| {
            if let Some(&vi) = self.var_index.get(name) {
                let raw = state[vi];
                return Some(if self.vars[vi].is_bool {
                    Value::Bool(raw != 0)
                } else {
                    Value::Num(BigRational::from_integer(raw.into()))
                });
            }
            self.constants.get(name).cloned()
        }
    }

    fn eval(&self, s: usize, e: &PExpr) -> Result<Value, BuildError> {
        let lookup = self.lookup(s);
        e.eval(&lookup).map_err(|err| BuildError::Eval {
            state: self.render_state(s),
            message: err.to_string(),
        })
    }

    fn guard_holds(&self, s: usize, guard: &[PExpr]) -> Result<bool, BuildError> {
        for conj in guard {
            match self.eval(s, conj)? {
                Value::Bool(true) => {}
                Value::Bool(false) => return Ok(false),
                Value::Num(_) => {
                    return Err(BuildError::Eval {
                        state: self.render_state(s),
                        message: "guard is numeric, expected boolean".to_string(),
                    })
                }
            }
        }
        Ok(true)
    }

    fn explore(&mut self, s: usize) -> Result<(), BuildError> {
        // Enabled commands per module, split into unlabeled and per-label.
        let mut unlabeled: Vec<&Command> = Vec::new();
        let mut labeled: BTreeMap<&str, Vec<Vec<&Command>>> = BTreeMap::new();
        for (mi, m) in self.modules.iter().enumerate() {
            for c in &m.commands {
                if !self.guard_holds(s, &c.guard)? {
                    continue;
                }
                match &c.action {
                    None => unlabeled.push(c),
                    Some(a) => {
                        let parts = &self.label_parts[a.as_str()];
                        let slot = parts.iter().position(|&p| p == mi).unwrap();
                        let entry = labeled
                            .entry(a.as_str())
                            .or_insert_with(|| vec![Vec::new(); parts.len()]);
                        entry[slot].push(c);
                    }
                }
            }
        }

        let mut new_choices: Vec<Choice> = Vec::new();
        for c in unlabeled {
            new_choices.push(self.make_choice(s, None, &[c])?);
        }
        for (action, per_module) in labeled {
            if per_module.iter().any(|v| v.is_empty()) {
                continue; // some participant blocks the synchronization
            }
            // Cartesian product over the participants' enabled commands.
            let mut combos: Vec<Vec<&Command>> = vec![Vec::new()];
            for options in &per_module {
                let mut next = Vec::with_capacity(combos.len() * options.len());
                for combo in &combos {
                    for &opt in options {
                        let mut c = combo.clone();
                        c.push(opt);
                        next.push(c);
                    }
                }
                combos = next;
            }
            for combo in combos {
                new_choices.push(self.make_choice(s, Some(action), &combo)?);
            }
        }

        if new_choices.is_empty() {
            self.deadlocks.push(s);
            if self.model_type != ModelType::Ctmc {
                // Keep dtmc rows stochastic / mdp states decisive.
                new_choices.push(Choice {
                    action: None,
                    branches: vec![(s, BigRational::one())],
                    rewards: vec![BigRational::zero(); self.reward_structs.len()],
                });
            }
        }
        self.choices[s] = new_choices;
        Ok(())
    }

    /// Combines one enabled command per participating module into a single
    /// choice: cross-product updates with multiplied weights, evaluated in
    /// the source state.
    fn make_choice(
        &mut self,
        s: usize,
        action: Option<&str>,
        combo: &[&Command],
    ) -> Result<Choice, BuildError> {
        let action_name = action.unwrap_or("");
        // (weight, assignments) alternatives accumulated across the combo.
        let mut branches: Vec<(BigRational, Vec<(usize, i64)>)> =
            vec![(BigRational::one(), Vec::new())];
        for cmd in combo {
            let mut next = Vec::with_capacity(branches.len() * cmd.updates.len());
            for upd in &cmd.updates {
                let w = match &upd.weight {
                    None => BigRational::one(),
                    Some(e) => match self.eval(s, e)? {
                        Value::Num(n) => n,
                        Value::Bool(_) => {
                            return Err(BuildError::Eval {
                                state: self.render_state(s),
                                message: "update weight is boolean".to_string(),
                            })
                        }
                    },
                };
                if w.is_negative() {
                    return Err(BuildError::NegativeWeight {
                        action: action_name.to_string(),
                        state: self.render_state(s),
                    });
                }
                let mut assigns = Vec::with_capacity(upd.assigns.len());
                for (var, rhs) in &upd.assigns {
                    let vi = self.var_index[var.as_str()];
                    let val = match self.eval(s, rhs)? {
                        Value::Bool(b) => i64::from(b),
                        Value::Num(n) => rational_to_i64(&n).ok_or_else(|| BuildError::Eval {
                            state: self.render_state(s),
                            message: format!("assignment to `{var}` is not an integer"),
                        })?,
                    };
                    let info = &self.vars[vi];
                    if val < info.lo || val > info.hi {
                        return Err(BuildError::RangeViolation {
                            var: var.clone(),
                            state: self.render_state(s),
                            value: val,
                            lo: info.lo,
                            hi: info.hi,
                        });
                    }
                    assigns.push((vi, val));
                }
                for (bw, bassigns) in &branches {
                    let mut merged = bassigns.clone();
                    for &(vi, val) in &assigns {
                        if let Some(&(_, prev)) = merged.iter().find(|(i, _)| *i == vi) {
                            if prev != val {
                                return Err(BuildError::WriteConflict {
                                    var: self.vars[vi].name.clone(),
                                    action: action_name.to_string(),
                                });
                            }
                        } else {
                            merged.push((vi, val));
                        }
                    }
                    next.push((bw * &w, merged));
                }
            }
            branches = next;
        }

        // Materialize targets, dropping zero-weight branches and merging
        // duplicate targets.
        let mut out: Vec<(usize, BigRational)> = Vec::new();
        let mut sum = BigRational::zero();
        for (w, assigns) in branches {
            if w.is_zero() {
                continue;
            }
            sum += &w;
            let mut target = self.states[s].clone();
            for (vi, val) in assigns {
                target[vi] = val;
            }
            let ti = self.intern(target)?;
            match out.iter_mut().find(|(t, _)| *t == ti) {
                Some((_, acc)) => *acc += w,
                None => out.push((ti, w)),
            }
        }

        if self.model_type != ModelType::Ctmc && !sum.is_one() {
            return Err(BuildError::BadProbabilitySum {
                action: action_name.to_string(),
                state: self.render_state(s),
                sum: admc_core::fmt_real(&sum),
            });
        }

        // Transition rewards: structure items matching this action whose
        // guard holds in the source state.
        let mut rewards = Vec::with_capacity(self.reward_structs.len());
        for rs in self.reward_structs {
            let mut total = BigRational::zero();
            if let Some(a) = action {
                for item in &rs.items {
                    if item.action == a && self.guard_holds(s, &item.guard)? {
                        match self.eval(s, &item.value)? {
                            Value::Num(n) => total += n,
                            Value::Bool(_) => {
                                return Err(BuildError::Eval {
                                    state: self.render_state(s),
                                    message: format!(
                                        "reward value in `{}` is boolean",
                                        rs.name
                                    ),
                                })
                            }
                        }
                    }
                }
            }
            rewards.push(total);
        }

        Ok(Choice {
            action: action.map(str::to_string),
            branches: out,
            rewards,
        })
    }
}

/// Evaluates declared constants in order, filling undefined ones from the
/// supplied map. Missing names are aggregated into one error; supplying a
/// name that is not an undefined constant is rejected.
fn eval_constants(
    model: &PrismModel,
    provided: &BTreeMap<String, Value>,
) -> Result<BTreeMap<String, Value>, BuildError> {
    let mut out: BTreeMap<String, Value> = BTreeMap::new();
    let mut open: BTreeSet<&str> = BTreeSet::new();
    let mut missing: Vec<String> = Vec::new();
    for c in &model.constants {
        let value = match (&c.value, provided.get(&c.name)) {
            (Some(e), _) => {
                let lookup = |n: &str| out.get(n).cloned();
                e.eval(&lookup).map_err(|err| BuildError::Eval {
                    state: "constant evaluation".to_string(),
                    message: format!("`{}`: {}", c.name, err),
                })?
            }
            (None, Some(v)) => {
                open.insert(c.name.as_str());
                v.clone()
            }
            (None, None) => {
                open.insert(c.name.as_str());
                missing.push(c.name.clone());
                continue;
            }
        };
        let value = match (c.ctype, value) {
            (ConstType::Int, Value::Num(n)) if n.is_integer() => Value::Num(n),
            (ConstType::Int, _) => {
                return Err(BuildError::ConstantType { name: c.name.clone(), expected: "an integer" })
            }
            (ConstType::Double, Value::Num(n)) => Value::Num(n),
            (ConstType::Double, _) => {
                return Err(BuildError::ConstantType { name: c.name.clone(), expected: "a number" })
            }
            (ConstType::Bool, Value::Bool(b)) => Value::Bool(b),
            (ConstType::Bool, _) => {
                return Err(BuildError::ConstantType { name: c.name.clone(), expected: "a boolean" })
            }
        };
        out.insert(c.name.clone(), value);
    }
    if !missing.is_empty() {
        return Err(BuildError::UndefinedConstants(missing));
    }
    for name in provided.keys() {
        if !open.contains(name.as_str()) {
            return Err(BuildError::UnknownConstant(name.clone()));
        }
    }
    Ok(out)
}

/// Folds each formula's disjunct list and expands formula-in-formula
/// references, rejecting cycles.
fn expand_formulas(model: &PrismModel) -> Result<BTreeMap<String, PExpr>, BuildError> {
    let raw: BTreeMap<String, PExpr> = model
        .formulas
        .iter()
        .map(|f| (f.name.clone(), PExpr::disjunction(f.disjuncts.clone())))
        .collect();
    let mut expanded: BTreeMap<String, PExpr> = BTreeMap::new();
    for name in raw.keys() {
        let mut trail = vec![name.clone()];
        let e = expand_one(&raw, &raw[name], &mut trail)?;
        expanded.insert(name.clone(), e);
    }
    Ok(expanded)
}

fn expand_one(
    raw: &BTreeMap<String, PExpr>,
    e: &PExpr,
    trail: &mut Vec<String>,
) -> Result<PExpr, BuildError> {
    Ok(match e {
        PExpr::Ident(n) => match raw.get(n) {
            Some(body) => {
                if trail.iter().any(|t| t == n) {
                    return Err(BuildError::CyclicFormula(n.clone()));
                }
                trail.push(n.clone());
                let out = expand_one(raw, body, trail)?;
                trail.pop();
                out
            }
            None => e.clone(),
        },
        PExpr::Int(_) | PExpr::Real(_) | PExpr::Bool(_) => e.clone(),
        PExpr::Not(x) => PExpr::Not(Box::new(expand_one(raw, x, trail)?)),
        PExpr::Neg(x) => PExpr::Neg(Box::new(expand_one(raw, x, trail)?)),
        PExpr::Bin(op, a, b) => PExpr::Bin(
            *op,
            Box::new(expand_one(raw, a, trail)?),
            Box::new(expand_one(raw, b, trail)?),
        ),
    })
}

fn subst(e: &PExpr, formulas: &BTreeMap<String, PExpr>) -> PExpr {
    match e {
        PExpr::Ident(n) => formulas.get(n).cloned().unwrap_or_else(|| e.clone()),
        PExpr::Int(_) | PExpr::Real(_) | PExpr::Bool(_) => e.clone(),
        PExpr::Not(x) => PExpr::Not(Box::new(subst(x, formulas))),
        PExpr::Neg(x) => PExpr::Neg(Box::new(subst(x, formulas))),
        PExpr::Bin(op, a, b) => {
            PExpr::Bin(*op, Box::new(subst(a, formulas)), Box::new(subst(b, formulas)))
        }
    }
}

fn subst_module(m: &PrismModule, formulas: &BTreeMap<String, PExpr>) -> PrismModule {
    let mut out = m.clone();
    for v in &mut out.vars {
        if let VarType::IntRange { lo, hi } = &mut v.vtype {
            *lo = subst(lo, formulas);
            *hi = subst(hi, formulas);
        }
        v.init = subst(&v.init, formulas);
    }
    for c in &mut out.commands {
        for g in &mut c.guard {
            *g = subst(g, formulas);
        }
        for u in &mut c.updates {
            if let Some(w) = &mut u.weight {
                *w = subst(w, formulas);
            }
            for (_, rhs) in &mut u.assigns {
                *rhs = subst(rhs, formulas);
            }
        }
    }
    out
}

fn subst_rewards(r: &RewardStruct, formulas: &BTreeMap<String, PExpr>) -> RewardStruct {
    let mut out = r.clone();
    for item in &mut out.items {
        for g in &mut item.guard {
            *g = subst(g, formulas);
        }
        item.value = subst(&item.value, formulas);
    }
    out
}

fn eval_int_in(
    e: &PExpr,
    lookup: &impl Fn(&str) -> Option<Value>,
    var: &str,
) -> Result<i64, BuildError> {
    match e.eval(lookup) {
        Ok(Value::Num(n)) => rational_to_i64(&n)
            .ok_or(BuildError::ConstantType { name: var.to_string(), expected: "an integer bound" }),
        _ => Err(BuildError::ConstantType { name: var.to_string(), expected: "an integer bound" }),
    }
}

fn rational_to_i64(n: &BigRational) -> Option<i64> {
    if !n.is_integer() {
        return None;
    }
    n.to_integer().to_i64()
}
