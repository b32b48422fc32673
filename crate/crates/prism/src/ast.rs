//! Abstract syntax for the PRISM-language subset we generate and parse:
//! model type, constants, formulas, global/local variables, modules with
//! guarded commands, and transition-reward structures.
//!
//! Qualified names (`PAL::I0::E1::pc`) are kept with their `::` separators in
//! this AST; flattening to valid PRISM identifiers happens in the emitter via
//! [`mangle_name`], which is checked for injectivity over the whole model.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_traits::Zero;
use thiserror::Error;

pub use admc_core::activity::ModelType;
pub use admc_core::expr::{BigRational, Value};
use admc_core::expr::{CmpOp, Expr};

/// Binary operators of the PRISM expression subset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PBinOp {
    Add,
    Sub,
    Mul,
    Div,
    And,
    Or,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl PBinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            PBinOp::Add => "+",
            PBinOp::Sub => "-",
            PBinOp::Mul => "*",
            PBinOp::Div => "/",
            PBinOp::And => "&",
            PBinOp::Or => "|",
            PBinOp::Eq => "=",
            PBinOp::Ne => "!=",
            PBinOp::Lt => "<",
            PBinOp::Le => "<=",
            PBinOp::Gt => ">",
            PBinOp::Ge => ">=",
        }
    }

    pub fn is_boolean(self) -> bool {
        matches!(self, PBinOp::And | PBinOp::Or)
    }
}

/// A PRISM expression. Identifiers cover constants, formulas, and variables;
/// which one a name denotes is resolved by the evaluation environment.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum PExpr {
    Int(BigInt),
    Real(BigRational),
    Bool(bool),
    Ident(String),
    Not(Box<PExpr>),
    Neg(Box<PExpr>),
    Bin(PBinOp, Box<PExpr>, Box<PExpr>),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PEvalError {
    #[error("undefined identifier `{0}`")]
    Undefined(String),
    #[error("division by zero")]
    DivisionByZero,
    #[error("type mismatch: {0}")]
    TypeMismatch(&'static str),
}

impl PExpr {
    pub fn int(n: i64) -> PExpr {
        PExpr::Int(BigInt::from(n))
    }

    pub fn ident(name: impl Into<String>) -> PExpr {
        PExpr::Ident(name.into())
    }

    pub fn not(e: PExpr) -> PExpr {
        PExpr::Not(Box::new(e))
    }

    pub fn bin(op: PBinOp, a: PExpr, b: PExpr) -> PExpr {
        PExpr::Bin(op, Box::new(a), Box::new(b))
    }

    pub fn eq(a: PExpr, b: PExpr) -> PExpr {
        PExpr::bin(PBinOp::Eq, a, b)
    }

    pub fn and(a: PExpr, b: PExpr) -> PExpr {
        PExpr::bin(PBinOp::And, a, b)
    }

    /// Folds a conjunct list back into one expression (`true` when empty).
    pub fn conjunction(mut conjuncts: Vec<PExpr>) -> PExpr {
        match conjuncts.len() {
            0 => PExpr::Bool(true),
            1 => conjuncts.pop().unwrap(),
            _ => {
                let mut it = conjuncts.into_iter();
                let first = it.next().unwrap();
                it.fold(first, PExpr::and)
            }
        }
    }

    /// Folds a disjunct list into one expression (`false` when empty).
    pub fn disjunction(mut disjuncts: Vec<PExpr>) -> PExpr {
        match disjuncts.len() {
            0 => PExpr::Bool(false),
            1 => disjuncts.pop().unwrap(),
            _ => {
                let mut it = disjuncts.into_iter();
                let first = it.next().unwrap();
                it.fold(first, |a, b| PExpr::bin(PBinOp::Or, a, b))
            }
        }
    }

    /// Converts an activity annotation expression; parameters become
    /// identifiers referring to the generated `const` declarations.
    pub fn from_expr(e: &Expr) -> PExpr {
        match e {
            Expr::Real(r) => PExpr::Real(r.clone()),
            Expr::Int(n) => PExpr::Int(n.clone()),
            Expr::Bool(b) => PExpr::Bool(*b),
            Expr::Param(name) => PExpr::Ident(name.clone()),
            Expr::Neg(x) => PExpr::Neg(Box::new(PExpr::from_expr(x))),
            Expr::Not(x) => PExpr::Not(Box::new(PExpr::from_expr(x))),
            Expr::Add(a, b) => PExpr::bin(PBinOp::Add, PExpr::from_expr(a), PExpr::from_expr(b)),
            Expr::Sub(a, b) => PExpr::bin(PBinOp::Sub, PExpr::from_expr(a), PExpr::from_expr(b)),
            Expr::Mul(a, b) => PExpr::bin(PBinOp::Mul, PExpr::from_expr(a), PExpr::from_expr(b)),
            Expr::Div(a, b) => PExpr::bin(PBinOp::Div, PExpr::from_expr(a), PExpr::from_expr(b)),
            Expr::And(a, b) => PExpr::bin(PBinOp::And, PExpr::from_expr(a), PExpr::from_expr(b)),
            Expr::Or(a, b) => PExpr::bin(PBinOp::Or, PExpr::from_expr(a), PExpr::from_expr(b)),
            Expr::Cmp(op, a, b) => {
                let pop = match op {
                    CmpOp::Lt => PBinOp::Lt,
                    CmpOp::Le => PBinOp::Le,
                    CmpOp::Gt => PBinOp::Gt,
                    CmpOp::Ge => PBinOp::Ge,
                    CmpOp::Eq => PBinOp::Eq,
                    CmpOp::Ne => PBinOp::Ne,
                };
                PExpr::bin(pop, PExpr::from_expr(a), PExpr::from_expr(b))
            }
        }
    }

    /// Evaluates against a name-lookup function covering constants, formulas,
    /// and variable valuations. Exact rational arithmetic throughout.
    pub fn eval(&self, lookup: &dyn Fn(&str) -> Option<Value>) -> Result<Value, PEvalError> {
        match self {
            PExpr::Int(n) => Ok(Value::Num(BigRational::from_integer(n.clone()))),
            PExpr::Real(r) => Ok(Value::Num(r.clone())),
            PExpr::Bool(b) => Ok(Value::Bool(*b)),
            PExpr::Ident(name) => {
                lookup(name).ok_or_else(|| PEvalError::Undefined(name.clone()))
            }
            PExpr::Not(e) => match e.eval(lookup)? {
                Value::Bool(b) => Ok(Value::Bool(!b)),
                Value::Num(_) => Err(PEvalError::TypeMismatch("`!` applied to a number")),
            },
            PExpr::Neg(e) => match e.eval(lookup)? {
                Value::Num(n) => Ok(Value::Num(-n)),
                Value::Bool(_) => Err(PEvalError::TypeMismatch("`-` applied to a boolean")),
            },
            PExpr::Bin(op, a, b) => {
                let lhs = a.eval(lookup)?;
                match op {
                    PBinOp::And => match lhs {
                        Value::Bool(false) => Ok(Value::Bool(false)),
                        Value::Bool(true) => match b.eval(lookup)? {
                            Value::Bool(r) => Ok(Value::Bool(r)),
                            _ => Err(PEvalError::TypeMismatch("`&` applied to a number")),
                        },
                        _ => Err(PEvalError::TypeMismatch("`&` applied to a number")),
                    },
                    PBinOp::Or => match lhs {
                        Value::Bool(true) => Ok(Value::Bool(true)),
                        Value::Bool(false) => match b.eval(lookup)? {
                            Value::Bool(r) => Ok(Value::Bool(r)),
                            _ => Err(PEvalError::TypeMismatch("`|` applied to a number")),
                        },
                        _ => Err(PEvalError::TypeMismatch("`|` applied to a number")),
                    },
                    PBinOp::Add | PBinOp::Sub | PBinOp::Mul | PBinOp::Div => {
                        let l = num(lhs)?;
                        let r = num(b.eval(lookup)?)?;
                        let v = match op {
                            PBinOp::Add => l + r,
                            PBinOp::Sub => l - r,
                            PBinOp::Mul => l * r,
                            PBinOp::Div => {
                                if r.is_zero() {
                                    return Err(PEvalError::DivisionByZero);
                                }
                                l / r
                            }
                            _ => unreachable!(),
                        };
                        Ok(Value::Num(v))
                    }
                    PBinOp::Eq | PBinOp::Ne => {
                        let rhs = b.eval(lookup)?;
                        let equal = match (&lhs, &rhs) {
                            (Value::Num(l), Value::Num(r)) => l == r,
                            (Value::Bool(l), Value::Bool(r)) => l == r,
                            _ => {
                                return Err(PEvalError::TypeMismatch(
                                    "comparison between a number and a boolean",
                                ))
                            }
                        };
                        Ok(Value::Bool(if *op == PBinOp::Eq { equal } else { !equal }))
                    }
                    PBinOp::Lt | PBinOp::Le | PBinOp::Gt | PBinOp::Ge => {
                        let l = num(lhs)?;
                        let r = num(b.eval(lookup)?)?;
                        Ok(Value::Bool(match op {
                            PBinOp::Lt => l < r,
                            PBinOp::Le => l <= r,
                            PBinOp::Gt => l > r,
                            PBinOp::Ge => l >= r,
                            _ => unreachable!(),
                        }))
                    }
                }
            }
        }
    }

    /// All identifiers referenced anywhere in the expression.
    pub fn collect_idents(&self, out: &mut Vec<String>) {
        match self {
            PExpr::Int(_) | PExpr::Real(_) | PExpr::Bool(_) => {}
            PExpr::Ident(n) => out.push(n.clone()),
            PExpr::Not(e) | PExpr::Neg(e) => e.collect_idents(out),
            PExpr::Bin(_, a, b) => {
                a.collect_idents(out);
                b.collect_idents(out);
            }
        }
    }
}

fn num(v: Value) -> Result<BigRational, PEvalError> {
    match v {
        Value::Num(n) => Ok(n),
        Value::Bool(_) => Err(PEvalError::TypeMismatch("expected a number, got a boolean")),
    }
}

/// PRISM constant types.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstType {
    Int,
    Double,
    Bool,
}

impl ConstType {
    pub fn keyword(self) -> &'static str {
        match self {
            ConstType::Int => "int",
            ConstType::Double => "double",
            ConstType::Bool => "bool",
        }
    }
}

/// `const <type> <name> [= value];` — a missing value is an *undefined*
/// constant that must be supplied at model-check time.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstantDecl {
    pub name: String,
    pub ctype: ConstType,
    pub value: Option<PExpr>,
}

/// `formula <name> = d1 | d2 | ...;` kept as its top-level disjunct list so
/// the generated "any flow wants to terminate" formulas print one disjunct
/// per module. An empty list denotes `false`.
#[derive(Debug, Clone, PartialEq)]
pub struct Formula {
    pub name: String,
    pub disjuncts: Vec<PExpr>,
}

impl Formula {
    pub fn expr(&self) -> PExpr {
        PExpr::disjunction(self.disjuncts.clone())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum VarType {
    Bool,
    /// Bounded integer; bounds may reference constants.
    IntRange { lo: PExpr, hi: PExpr },
}

#[derive(Debug, Clone, PartialEq)]
pub struct VarDecl {
    pub name: String,
    pub vtype: VarType,
    pub init: PExpr,
}

/// One update alternative of a command: an optional probability/rate weight
/// and a list of assignments. An empty assignment list is PRISM's `true`
/// (self-loop) update.
#[derive(Debug, Clone, PartialEq)]
pub struct Update {
    pub weight: Option<PExpr>,
    pub assigns: Vec<(String, PExpr)>,
}

/// `[action] guard -> w1:u1 + ... + wn:un;`
///
/// The guard is stored as a conjunct list mirroring the emitted layout; use
/// [`Command::guard_expr`] for a single expression.
#[derive(Debug, Clone, PartialEq)]
pub struct Command {
    pub action: Option<String>,
    pub guard: Vec<PExpr>,
    pub updates: Vec<Update>,
}

impl Command {
    pub fn guard_expr(&self) -> PExpr {
        PExpr::conjunction(self.guard.clone())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrismModule {
    pub name: String,
    pub vars: Vec<VarDecl>,
    pub commands: Vec<Command>,
}

/// A transition-reward item: `[action] guard : value;`
#[derive(Debug, Clone, PartialEq)]
pub struct RewardItem {
    pub action: String,
    pub guard: Vec<PExpr>,
    pub value: PExpr,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RewardStruct {
    pub name: String,
    pub items: Vec<RewardItem>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrismModel {
    pub model_type: ModelType,
    pub constants: Vec<ConstantDecl>,
    pub globals: Vec<VarDecl>,
    pub formulas: Vec<Formula>,
    pub reward_structs: Vec<RewardStruct>,
    pub modules: Vec<PrismModule>,
}

impl PrismModel {
    pub fn empty(model_type: ModelType) -> PrismModel {
        PrismModel {
            model_type,
            constants: Vec::new(),
            globals: Vec::new(),
            formulas: Vec::new(),
            reward_structs: Vec::new(),
            modules: Vec::new(),
        }
    }

    pub fn constant(&self, name: &str) -> Option<&ConstantDecl> {
        self.constants.iter().find(|c| c.name == name)
    }

    pub fn formula(&self, name: &str) -> Option<&Formula> {
        self.formulas.iter().find(|f| f.name == name)
    }

    pub fn module(&self, name: &str) -> Option<&PrismModule> {
        self.modules.iter().find(|m| m.name == name)
    }

    pub fn reward_struct(&self, name: &str) -> Option<&RewardStruct> {
        self.reward_structs.iter().find(|r| r.name == name)
    }

    /// All local variable declarations across modules, in module order.
    pub fn local_vars(&self) -> impl Iterator<Item = (&PrismModule, &VarDecl)> {
        self.modules
            .iter()
            .flat_map(|m| m.vars.iter().map(move |v| (m, v)))
    }
}

/// Flattens a qualified name into a PRISM identifier by joining its segments
/// with `_` (`PAL::F1::E25::AF` becomes `PAL_F1_E25_AF`).
pub fn mangle_name(name: &str) -> String {
    name.replace("::", "_")
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NameError {
    #[error("name collision: `{first}` and `{second}` both flatten to `{mangled}`")]
    NameCollision {
        first: String,
        second: String,
        mangled: String,
    },
}

/// Checks that [`mangle_name`] is injective over every name declared in the
/// model (constants, formulas, variables, modules, action labels, reward
/// structure names).
pub fn check_mangling(model: &PrismModel) -> Result<(), NameError> {
    let mut seen: BTreeMap<String, String> = BTreeMap::new();
    let mut add = |name: &str| -> Result<(), NameError> {
        let mangled = mangle_name(name);
        match seen.get(&mangled) {
            Some(prev) if prev != name => Err(NameError::NameCollision {
                first: prev.clone(),
                second: name.to_string(),
                mangled,
            }),
            Some(_) => Ok(()),
            None => {
                seen.insert(mangled, name.to_string());
                Ok(())
            }
        }
    };
    for c in &model.constants {
        add(&c.name)?;
    }
    for g in &model.globals {
        add(&g.name)?;
    }
    for f in &model.formulas {
        add(&f.name)?;
    }
    for m in &model.modules {
        add(&m.name)?;
        for v in &m.vars {
            add(&v.name)?;
        }
        for c in &m.commands {
            if let Some(a) = &c.action {
                add(a)?;
            }
        }
    }
    for r in &model.reward_structs {
        for item in &r.items {
            add(&item.action)?;
        }
    }
    Ok(())
}

impl fmt::Display for PExpr {
    /// Renders via the emitter's canonical expression layout.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&crate::emit::render_expr(self))
    }
}
