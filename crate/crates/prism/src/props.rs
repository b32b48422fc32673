//! Property parsing and atom resolution.
//!
//! Properties are written in the PRISM property-specification subset —
//! `P=?`/`Pmax=?`/`Pmin=?` with (bounded) eventually and until, `R=?` reward
//! queries over reachability or cumulative horizons, `A [F φ]`, `filter`,
//! and arithmetic combinations — extended with controlled-natural-language
//! atoms over the source activity:
//!
//! * `ACT reaches at ACT::NODE` — some flow sits at the node,
//! * `ACT terminated successfully` — terminated without a recorded failure,
//! * `ACT terminated on fail` — terminated after an action failure,
//! * `ACT failed` — an action failure was recorded.
//!
//! [`resolve_group`] rewrites these atoms into plain expressions over the
//! generated model's (mangled) variables, expands label definitions, and
//! leaves label *references* intact so the emitted `.props` file stays
//! readable. Resolution is purely syntactic: resolved text re-parses into
//! the same structure with every atom in raw-expression form.

use std::collections::BTreeMap;

use thiserror::Error;

use admc_core::activity::{Activity, PropertyGroup};
use admc_core::expr::{fmt_real, BigRational};

use crate::alloc::ModMaps;
use crate::ast::{mangle_name, PBinOp, PExpr};
use crate::parse::ParseError;

// ---- AST ---------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub enum PropAst {
    Prob {
        bound: ProbBound,
        path: PathForm,
    },
    Reward {
        name: Option<String>,
        goal: RewardGoal,
    },
    /// `A [F φ]`: φ holds eventually on all resolutions of nondeterminism —
    /// checked as qualitative probability-1 reachability.
    ForAll(SForm),
    Filter {
        op: FilterOp,
        inner: Box<PropAst>,
        cond: SForm,
    },
    Num(BigRational),
    ConstRef(String),
    Neg(Box<PropAst>),
    Add(Box<PropAst>, Box<PropAst>),
    Sub(Box<PropAst>, Box<PropAst>),
    Mul(Box<PropAst>, Box<PropAst>),
    Div(Box<PropAst>, Box<PropAst>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProbBound {
    Query,
    Max,
    Min,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PathForm {
    Eventually(SForm, Option<TimeBound>),
    Until(SForm, SForm, Option<TimeBound>),
}

/// A step bound under dtmc/mdp, a time bound under ctmc; which one is
/// decided by the model the property is checked against.
#[derive(Debug, Clone, PartialEq)]
pub enum TimeBound {
    Le(BigRational),
    Eq(BigRational),
}

#[derive(Debug, Clone, PartialEq)]
pub enum RewardGoal {
    Reach(SForm),
    Cumulative(BigRational),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FilterOp {
    Max,
    Min,
}

/// State formula: boolean combinations of atoms.
#[derive(Debug, Clone, PartialEq)]
pub enum SForm {
    Bool(bool),
    Atom(Atom),
    Not(Box<SForm>),
    And(Box<SForm>, Box<SForm>),
    Or(Box<SForm>, Box<SForm>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Atom {
    ReachesAt { activity: String, node: String },
    TerminatedSuccessfully(String),
    TerminatedOnFail(String),
    Failed(String),
    Label(String),
    Raw(PExpr),
}

/// A property group after atom resolution: fully-expanded label definitions
/// plus the named properties with label references kept symbolic.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedGroup {
    pub labels: Vec<(String, SForm)>,
    pub properties: Vec<(String, PropAst)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ResolveError {
    #[error("unknown activity `{0}` in property atom")]
    UnknownActivity(String),
    #[error("unknown node `{0}` in property atom")]
    UnknownNode(String),
    #[error("unknown label \"{0}\"")]
    UnknownLabel(String),
    #[error("label \"{0}\" is defined in terms of itself")]
    LabelCycle(String),
    #[error("{0}")]
    Parse(ParseError),
}

impl From<ParseError> for ResolveError {
    fn from(e: ParseError) -> Self {
        ResolveError::Parse(e)
    }
}

// ---- parsing -------------------------------------------------------------------

/// Tokens reused from the model parser; properties additionally need `?`,
/// `{`, `}` and qualified names, which the property parser assembles from
/// `::` token pairs.
struct PParser {
    src: Vec<char>,
    pos: usize,
    line: usize,
    col: usize,
}

impl PParser {
    fn new(src: &str) -> Self {
        PParser {
            src: src.chars().collect(),
            pos: 0,
            line: 1,
            col: 1,
        }
    }

    fn error(&self, message: impl Into<String>) -> ParseError {
        ParseError {
            line: self.line,
            col: self.col,
            message: message.into(),
        }
    }

    fn peek_char(&self) -> Option<char> {
        self.src.get(self.pos).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.src.get(self.pos).copied()?;
        self.pos += 1;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn skip_ws(&mut self) {
        loop {
            match self.peek_char() {
                Some(c) if c.is_whitespace() => {
                    self.bump();
                }
                Some('/') if self.src.get(self.pos + 1) == Some(&'/') => {
                    while let Some(c) = self.peek_char() {
                        if c == '\n' {
                            break;
                        }
                        self.bump();
                    }
                }
                _ => break,
            }
        }
    }

    fn at_end(&mut self) -> bool {
        self.skip_ws();
        self.peek_char().is_none()
    }

    /// Peeks the identifier starting at the current position, if any.
    fn peek_ident(&mut self) -> Option<String> {
        self.skip_ws();
        let c = self.peek_char()?;
        if !(c.is_ascii_alphabetic() || c == '_') {
            return None;
        }
        let mut end = self.pos;
        while end < self.src.len()
            && (self.src[end].is_ascii_alphanumeric() || self.src[end] == '_')
        {
            end += 1;
        }
        Some(self.src[self.pos..end].iter().collect())
    }

    fn take_ident(&mut self) -> Option<String> {
        let id = self.peek_ident()?;
        for _ in 0..id.len() {
            self.bump();
        }
        Some(id)
    }

    fn eat_str(&mut self, s: &str) -> bool {
        self.skip_ws();
        let chars: Vec<char> = s.chars().collect();
        if self.src[self.pos..].starts_with(&chars[..]) {
            for _ in 0..chars.len() {
                self.bump();
            }
            true
        } else {
            false
        }
    }

    fn expect_str(&mut self, s: &str) -> Result<(), ParseError> {
        if self.eat_str(s) {
            Ok(())
        } else {
            Err(self.error(format!("expected `{}`", s)))
        }
    }

    fn peek_is(&mut self, s: &str) -> bool {
        self.skip_ws();
        let chars: Vec<char> = s.chars().collect();
        self.src[self.pos..].starts_with(&chars[..])
    }

    fn take_string_lit(&mut self) -> Result<String, ParseError> {
        self.expect_str("\"")?;
        let mut out = String::new();
        loop {
            match self.bump() {
                Some('"') => return Ok(out),
                Some(c) => out.push(c),
                None => return Err(self.error("unterminated string literal")),
            }
        }
    }

    fn take_number(&mut self) -> Result<BigRational, ParseError> {
        self.skip_ws();
        let start = self.pos;
        while self
            .peek_char()
            .map_or(false, |c| c.is_ascii_digit() || c == '.')
        {
            self.bump();
        }
        if matches!(self.peek_char(), Some('e') | Some('E')) {
            let next = self.src.get(self.pos + 1).copied();
            let next2 = self.src.get(self.pos + 2).copied();
            let signed_exp = matches!(next, Some('+') | Some('-'))
                && next2.map_or(false, |c| c.is_ascii_digit());
            if next.map_or(false, |c| c.is_ascii_digit()) || signed_exp {
                self.bump();
                if matches!(self.peek_char(), Some('+') | Some('-')) {
                    self.bump();
                }
                while self.peek_char().map_or(false, |c| c.is_ascii_digit()) {
                    self.bump();
                }
            }
        }
        let text: String = self.src[start..self.pos].iter().collect();
        if text.is_empty() {
            return Err(self.error("expected a number"));
        }
        admc_core::expr::rational_from_decimal_str(&text)
            .ok_or_else(|| self.error(format!("invalid number `{}`", text)))
    }

    /// A possibly-qualified name: `ident(::ident)*`.
    fn take_qualified(&mut self) -> Result<String, ParseError> {
        let mut name = self
            .take_ident()
            .ok_or_else(|| self.error("expected a name"))?;
        while self.peek_is("::") {
            self.expect_str("::")?;
            let part = self
                .take_ident()
                .ok_or_else(|| self.error("expected a name after `::`"))?;
            name.push_str("::");
            name.push_str(&part);
        }
        Ok(name)
    }

    // -- property grammar --

    fn parse_prop(&mut self) -> Result<PropAst, ParseError> {
        let mut e = self.parse_term()?;
        loop {
            if self.eat_str("+") {
                let rhs = self.parse_term()?;
                e = PropAst::Add(Box::new(e), Box::new(rhs));
            } else if self.peek_is("-") && !self.peek_is("->") {
                self.expect_str("-")?;
                let rhs = self.parse_term()?;
                e = PropAst::Sub(Box::new(e), Box::new(rhs));
            } else {
                break;
            }
        }
        Ok(e)
    }

    fn parse_term(&mut self) -> Result<PropAst, ParseError> {
        let mut e = self.parse_factor()?;
        loop {
            if self.eat_str("*") {
                let rhs = self.parse_factor()?;
                e = PropAst::Mul(Box::new(e), Box::new(rhs));
            } else if self.eat_str("/") {
                let rhs = self.parse_factor()?;
                e = PropAst::Div(Box::new(e), Box::new(rhs));
            } else {
                break;
            }
        }
        Ok(e)
    }

    fn parse_factor(&mut self) -> Result<PropAst, ParseError> {
        self.skip_ws();
        if self.eat_str("(") {
            let e = self.parse_prop()?;
            self.expect_str(")")?;
            return Ok(e);
        }
        if self.peek_is("-") {
            self.expect_str("-")?;
            let inner = self.parse_factor()?;
            return Ok(PropAst::Neg(Box::new(inner)));
        }
        match self.peek_ident().as_deref() {
            Some("P") | Some("Pmax") | Some("Pmin") => return self.parse_prob_query(),
            Some("R") => return self.parse_reward_query(),
            Some("A") => return self.parse_forall(),
            Some("filter") => return self.parse_filter(),
            Some("true") | Some("false") => {
                return Err(self.error("boolean literals are not properties"));
            }
            Some(_) => {
                let name = self.take_ident().unwrap();
                return Ok(PropAst::ConstRef(name));
            }
            None => {}
        }
        if self
            .peek_char()
            .map_or(false, |c| c.is_ascii_digit() || c == '.')
        {
            return Ok(PropAst::Num(self.take_number()?));
        }
        Err(self.error("expected a property"))
    }

    fn parse_prob_query(&mut self) -> Result<PropAst, ParseError> {
        let kw = self.take_ident().unwrap();
        let bound = match kw.as_str() {
            "P" => ProbBound::Query,
            "Pmax" => ProbBound::Max,
            "Pmin" => ProbBound::Min,
            _ => unreachable!(),
        };
        self.expect_str("=?")?;
        self.expect_str("[")?;
        let path = self.parse_path()?;
        self.expect_str("]")?;
        Ok(PropAst::Prob { bound, path })
    }

    fn parse_reward_query(&mut self) -> Result<PropAst, ParseError> {
        self.take_ident();
        let name = if self.eat_str("{") {
            let n = self.take_string_lit()?;
            self.expect_str("}")?;
            Some(n)
        } else {
            None
        };
        self.expect_str("=?")?;
        self.expect_str("[")?;
        let goal = if self.peek_ident().as_deref() == Some("C") {
            self.take_ident();
            self.expect_str("<=")?;
            let t = self.take_number()?;
            RewardGoal::Cumulative(t)
        } else if self.peek_ident().as_deref() == Some("F") {
            self.take_ident();
            RewardGoal::Reach(self.parse_sform()?)
        } else {
            return Err(self.error("expected `F` or `C<=` in reward query"));
        };
        self.expect_str("]")?;
        Ok(PropAst::Reward { name, goal })
    }

    fn parse_forall(&mut self) -> Result<PropAst, ParseError> {
        self.take_ident();
        self.expect_str("[")?;
        if self.peek_ident().as_deref() != Some("F") {
            return Err(self.error("only `A [F φ]` is supported"));
        }
        self.take_ident();
        let goal = self.parse_sform()?;
        self.expect_str("]")?;
        Ok(PropAst::ForAll(goal))
    }

    fn parse_filter(&mut self) -> Result<PropAst, ParseError> {
        self.take_ident();
        self.expect_str("(")?;
        let op = match self.take_ident().as_deref() {
            Some("max") => FilterOp::Max,
            Some("min") => FilterOp::Min,
            _ => return Err(self.error("expected `max` or `min` as filter operation")),
        };
        self.expect_str(",")?;
        let inner = self.parse_prop()?;
        self.expect_str(",")?;
        let cond = self.parse_sform()?;
        self.expect_str(")")?;
        Ok(PropAst::Filter {
            op,
            inner: Box::new(inner),
            cond,
        })
    }

    fn parse_path(&mut self) -> Result<PathForm, ParseError> {
        if self.peek_ident().as_deref() == Some("F") {
            let mark = (self.pos, self.line, self.col);
            self.take_ident();
            // `F` may itself be a variable in a raw until formula; if an `U`
            // follows later we would have mis-parsed, but the subset keeps
            // `F`/`U` reserved inside path formulas, matching PRISM.
            let bound = self.parse_bound_opt()?;
            let goal = self.parse_sform()?;
            if self.peek_ident().as_deref() == Some("U") {
                // It was the left operand of an until after all.
                (self.pos, self.line, self.col) = mark;
            } else {
                return Ok(PathForm::Eventually(goal, bound));
            }
        }
        let lhs = self.parse_sform()?;
        if self.take_ident().as_deref() != Some("U") {
            return Err(self.error("expected `U` in until formula"));
        }
        let bound = self.parse_bound_opt()?;
        let rhs = self.parse_sform()?;
        Ok(PathForm::Until(lhs, rhs, bound))
    }

    fn parse_bound_opt(&mut self) -> Result<Option<TimeBound>, ParseError> {
        if self.eat_str("<=") {
            Ok(Some(TimeBound::Le(self.take_number()?)))
        } else if self.peek_is("=") && !self.peek_is("=?") {
            self.expect_str("=")?;
            Ok(Some(TimeBound::Eq(self.take_number()?)))
        } else {
            Ok(None)
        }
    }

    // -- state formulas --

    fn parse_sform(&mut self) -> Result<SForm, ParseError> {
        let mut e = self.parse_sform_and()?;
        while self.peek_is("|") {
            self.expect_str("|")?;
            let rhs = self.parse_sform_and()?;
            e = SForm::Or(Box::new(e), Box::new(rhs));
        }
        Ok(e)
    }

    fn parse_sform_and(&mut self) -> Result<SForm, ParseError> {
        let mut e = self.parse_sform_unary()?;
        while self.peek_is("&") {
            self.expect_str("&")?;
            let rhs = self.parse_sform_unary()?;
            e = SForm::And(Box::new(e), Box::new(rhs));
        }
        Ok(e)
    }

    fn parse_sform_unary(&mut self) -> Result<SForm, ParseError> {
        self.skip_ws();
        if self.peek_is("!") {
            self.expect_str("!")?;
            let inner = self.parse_sform_unary()?;
            return Ok(SForm::Not(Box::new(inner)));
        }
        if self.peek_is("\"") {
            let name = self.take_string_lit()?;
            return Ok(SForm::Atom(Atom::Label(name)));
        }
        if self.peek_is("(") {
            self.expect_str("(")?;
            let e = self.parse_sform()?;
            self.expect_str(")")?;
            return Ok(e);
        }
        self.parse_atom()
    }

    /// An atom: a natural-language pattern starting with an activity name, a
    /// boolean literal, or a raw comparison over model identifiers.
    fn parse_atom(&mut self) -> Result<SForm, ParseError> {
        let first = match self.peek_ident() {
            Some(id) => id,
            None => {
                // Raw atoms can also start with a number: `3 < x`.
                let e = self.parse_raw_expr()?;
                return Ok(SForm::Atom(Atom::Raw(e)));
            }
        };
        match first.as_str() {
            "true" => {
                self.take_ident();
                return Ok(SForm::Bool(true));
            }
            "false" => {
                self.take_ident();
                return Ok(SForm::Bool(false));
            }
            _ => {}
        }
        // Look ahead past the (qualified) first name for a natural pattern.
        let mark = (self.pos, self.line, self.col);
        let activity = self.take_qualified()?;
        match self.peek_ident().as_deref() {
            Some("reaches") => {
                self.take_ident();
                if self.peek_ident().as_deref() == Some("at") {
                    self.take_ident();
                } else {
                    return Err(self.error("expected `at` after `reaches`"));
                }
                let node = self.take_qualified()?;
                return Ok(SForm::Atom(Atom::ReachesAt { activity, node }));
            }
            Some("terminated") => {
                self.take_ident();
                match self.peek_ident().as_deref() {
                    Some("successfully") => {
                        self.take_ident();
                        return Ok(SForm::Atom(Atom::TerminatedSuccessfully(activity)));
                    }
                    Some("on") => {
                        self.take_ident();
                        if self.peek_ident().as_deref() == Some("fail") {
                            self.take_ident();
                            return Ok(SForm::Atom(Atom::TerminatedOnFail(activity)));
                        }
                        return Err(self.error("expected `fail` after `terminated on`"));
                    }
                    _ => {
                        return Err(self.error(
                            "expected `successfully` or `on fail` after `terminated`",
                        ))
                    }
                }
            }
            Some("failed") => {
                self.take_ident();
                return Ok(SForm::Atom(Atom::Failed(activity)));
            }
            _ => {}
        }
        // Not a natural pattern: rewind and parse a raw expression.
        (self.pos, self.line, self.col) = mark;
        let e = self.parse_raw_expr()?;
        Ok(SForm::Atom(Atom::Raw(e)))
    }

    /// Raw comparison-level expression: arithmetic over identifiers and
    /// literals with at most one comparison operator. Boolean connectives
    /// stay at the state-formula level.
    fn parse_raw_expr(&mut self) -> Result<PExpr, ParseError> {
        let lhs = self.parse_raw_add()?;
        self.skip_ws();
        let op = if self.eat_str("!=") {
            Some(PBinOp::Ne)
        } else if self.eat_str("<=") {
            Some(PBinOp::Le)
        } else if self.eat_str(">=") {
            Some(PBinOp::Ge)
        } else if self.peek_is("=") && !self.peek_is("=?") {
            self.expect_str("=")?;
            Some(PBinOp::Eq)
        } else if self.eat_str("<") {
            Some(PBinOp::Lt)
        } else if self.eat_str(">") {
            Some(PBinOp::Gt)
        } else {
            None
        };
        match op {
            Some(op) => {
                let rhs = self.parse_raw_add()?;
                Ok(PExpr::bin(op, lhs, rhs))
            }
            None => Ok(lhs),
        }
    }

    fn parse_raw_add(&mut self) -> Result<PExpr, ParseError> {
        let mut e = self.parse_raw_mul()?;
        loop {
            self.skip_ws();
            if self.eat_str("+") {
                let rhs = self.parse_raw_mul()?;
                e = PExpr::bin(PBinOp::Add, e, rhs);
            } else if self.peek_is("-") && !self.peek_is("->") {
                self.expect_str("-")?;
                let rhs = self.parse_raw_mul()?;
                e = PExpr::bin(PBinOp::Sub, e, rhs);
            } else {
                break;
            }
        }
        Ok(e)
    }

    fn parse_raw_mul(&mut self) -> Result<PExpr, ParseError> {
        let mut e = self.parse_raw_unary()?;
        loop {
            self.skip_ws();
            if self.eat_str("*") {
                let rhs = self.parse_raw_unary()?;
                e = PExpr::bin(PBinOp::Mul, e, rhs);
            } else if self.eat_str("/") {
                let rhs = self.parse_raw_unary()?;
                e = PExpr::bin(PBinOp::Div, e, rhs);
            } else {
                break;
            }
        }
        Ok(e)
    }

    fn parse_raw_unary(&mut self) -> Result<PExpr, ParseError> {
        self.skip_ws();
        if self.peek_is("-") {
            self.expect_str("-")?;
            let inner = self.parse_raw_unary()?;
            return Ok(PExpr::Neg(Box::new(inner)));
        }
        if self.eat_str("(") {
            let e = self.parse_raw_expr()?;
            self.expect_str(")")?;
            return Ok(e);
        }
        if let Some(id) = self.peek_ident() {
            match id.as_str() {
                "true" => {
                    self.take_ident();
                    return Ok(PExpr::Bool(true));
                }
                "false" => {
                    self.take_ident();
                    return Ok(PExpr::Bool(false));
                }
                _ => return Ok(PExpr::Ident(self.take_qualified()?)),
            }
        }
        if self
            .peek_char()
            .map_or(false, |c| c.is_ascii_digit() || c == '.')
        {
            let n = self.take_number()?;
            return Ok(if n.is_integer() {
                PExpr::Int(n.to_integer())
            } else {
                PExpr::Real(n)
            });
        }
        Err(self.error("expected an expression"))
    }
}

/// Parses a single property.
pub fn parse_property(text: &str) -> Result<PropAst, ParseError> {
    let mut p = PParser::new(text);
    let ast = p.parse_prop()?;
    p.skip_ws();
    // Allow one optional trailing semicolon.
    p.eat_str(";");
    if !p.at_end() {
        return Err(p.error("unexpected trailing input after property"));
    }
    Ok(ast)
}

/// Parses a label definition body (a state formula).
pub fn parse_state_formula(text: &str) -> Result<SForm, ParseError> {
    let mut p = PParser::new(text);
    let sf = p.parse_sform()?;
    p.skip_ws();
    p.eat_str(";");
    if !p.at_end() {
        return Err(p.error("unexpected trailing input after state formula"));
    }
    Ok(sf)
}

/// A parsed `.props` file: label definitions and the properties themselves,
/// in file order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PropsFile {
    pub labels: Vec<(String, SForm)>,
    pub properties: Vec<PropAst>,
}

/// Parses a PRISM property file: `label "name" = φ;` definitions followed by
/// one property per line (semicolons optional, `//` comments ignored).
pub fn parse_props_file(text: &str) -> Result<PropsFile, ParseError> {
    let mut p = PParser::new(text);
    let mut out = PropsFile::default();
    loop {
        if p.at_end() {
            return Ok(out);
        }
        if p.peek_ident().as_deref() == Some("label") {
            p.take_ident();
            let name = p.take_string_lit()?;
            p.expect_str("=")?;
            let body = p.parse_sform()?;
            p.expect_str(";")?;
            out.labels.push((name, body));
            continue;
        }
        let prop = p.parse_prop()?;
        p.eat_str(";");
        out.properties.push(prop);
    }
}

// ---- resolution -----------------------------------------------------------------

/// Rewrites the natural-language atoms of one property group against the
/// generated model: node references become program-counter tests (mangled
/// names), termination atoms become tests on the termination bookkeeping,
/// and label bodies are expanded recursively.
pub fn resolve_group(
    act: &Activity,
    mm: &ModMaps,
    group: &PropertyGroup,
) -> Result<ResolvedGroup, ResolveError> {
    // Pass 1: parse and atom-resolve every label body.
    let mut resolved_labels: Vec<(String, SForm)> = Vec::new();
    for (name, body) in &group.labels {
        let sf = parse_state_formula(body)?;
        let sf = resolve_sform(&sf, act, mm, true)?;
        resolved_labels.push((name.clone(), sf));
    }
    // Pass 2: expand label-in-label references (cycle-checked).
    let by_name: BTreeMap<String, SForm> = resolved_labels.iter().cloned().collect();
    let mut expanded: Vec<(String, SForm)> = Vec::new();
    for (name, sf) in &resolved_labels {
        let mut trail = vec![name.clone()];
        expanded.push((name.clone(), expand_labels(sf, &by_name, &mut trail)?));
    }
    let label_map: BTreeMap<String, SForm> = expanded.iter().cloned().collect();
    // Pass 3: resolve the properties, keeping label references but checking
    // that they point at a defined label.
    let mut properties = Vec::new();
    for (name, text) in &group.properties {
        let ast = parse_property(text)?;
        let ast = resolve_prop(&ast, act, mm, &label_map)?;
        properties.push((name.clone(), ast));
    }
    Ok(ResolvedGroup {
        labels: expanded,
        properties,
    })
}

impl ResolvedGroup {
    /// Looks up a label's fully-expanded definition.
    pub fn label(&self, name: &str) -> Option<&SForm> {
        self.labels
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, sf)| sf)
    }

    /// Returns a property with every label reference inlined, ready for
    /// evaluation against the state space.
    pub fn inlined(&self, prop: &PropAst) -> Result<PropAst, ResolveError> {
        let by_name: BTreeMap<String, SForm> = self.labels.iter().cloned().collect();
        inline_prop_labels(prop, &by_name)
    }
}

fn resolve_prop(
    ast: &PropAst,
    act: &Activity,
    mm: &ModMaps,
    labels: &BTreeMap<String, SForm>,
) -> Result<PropAst, ResolveError> {
    let rs = |sf: &SForm| -> Result<SForm, ResolveError> {
        let resolved = resolve_sform(sf, act, mm, true)?;
        check_labels(&resolved, labels)?;
        Ok(resolved)
    };
    Ok(match ast {
        PropAst::Prob { bound, path } => PropAst::Prob {
            bound: *bound,
            path: match path {
                PathForm::Eventually(sf, b) => PathForm::Eventually(rs(sf)?, b.clone()),
                PathForm::Until(l, r, b) => PathForm::Until(rs(l)?, rs(r)?, b.clone()),
            },
        },
        PropAst::Reward { name, goal } => PropAst::Reward {
            name: name.clone(),
            goal: match goal {
                RewardGoal::Reach(sf) => RewardGoal::Reach(rs(sf)?),
                RewardGoal::Cumulative(t) => RewardGoal::Cumulative(t.clone()),
            },
        },
        PropAst::ForAll(sf) => PropAst::ForAll(rs(sf)?),
        PropAst::Filter { op, inner, cond } => PropAst::Filter {
            op: *op,
            inner: Box::new(resolve_prop(inner, act, mm, labels)?),
            cond: rs(cond)?,
        },
        PropAst::Num(n) => PropAst::Num(n.clone()),
        PropAst::ConstRef(n) => PropAst::ConstRef(mangle_name(n)),
        PropAst::Neg(a) => PropAst::Neg(Box::new(resolve_prop(a, act, mm, labels)?)),
        PropAst::Add(a, b) => PropAst::Add(
            Box::new(resolve_prop(a, act, mm, labels)?),
            Box::new(resolve_prop(b, act, mm, labels)?),
        ),
        PropAst::Sub(a, b) => PropAst::Sub(
            Box::new(resolve_prop(a, act, mm, labels)?),
            Box::new(resolve_prop(b, act, mm, labels)?),
        ),
        PropAst::Mul(a, b) => PropAst::Mul(
            Box::new(resolve_prop(a, act, mm, labels)?),
            Box::new(resolve_prop(b, act, mm, labels)?),
        ),
        PropAst::Div(a, b) => PropAst::Div(
            Box::new(resolve_prop(a, act, mm, labels)?),
            Box::new(resolve_prop(b, act, mm, labels)?),
        ),
    })
}

/// Rewrites natural atoms into raw expressions over mangled model names.
fn resolve_sform(
    sf: &SForm,
    act: &Activity,
    mm: &ModMaps,
    mangle: bool,
) -> Result<SForm, ResolveError> {
    let m = |name: &str| -> String {
        if mangle {
            mangle_name(name)
        } else {
            name.to_string()
        }
    };
    Ok(match sf {
        SForm::Bool(b) => SForm::Bool(*b),
        SForm::Not(x) => SForm::Not(Box::new(resolve_sform(x, act, mm, mangle)?)),
        SForm::And(a, b) => SForm::And(
            Box::new(resolve_sform(a, act, mm, mangle)?),
            Box::new(resolve_sform(b, act, mm, mangle)?),
        ),
        SForm::Or(a, b) => SForm::Or(
            Box::new(resolve_sform(a, act, mm, mangle)?),
            Box::new(resolve_sform(b, act, mm, mangle)?),
        ),
        SForm::Atom(atom) => match atom {
            Atom::Label(name) => SForm::Atom(Atom::Label(name.clone())),
            Atom::Raw(e) => SForm::Atom(Atom::Raw(mangle_expr_names(e, mangle))),
            Atom::ReachesAt { activity, node } => {
                check_activity(act, activity)?;
                // `ACT::NODE` and plain `NODE` both name the node.
                let bare = node
                    .strip_prefix(&format!("{}::", act.name))
                    .unwrap_or(node);
                if act.node(bare).is_none() {
                    return Err(ResolveError::UnknownNode(node.clone()));
                }
                let owners = mm.modules_defining(bare);
                if owners.is_empty() {
                    return Err(ResolveError::UnknownNode(node.clone()));
                }
                let tests: Vec<SForm> = owners
                    .iter()
                    .map(|idx| {
                        let module = &mm.modules[*idx].name;
                        SForm::Atom(Atom::Raw(PExpr::eq(
                            PExpr::ident(m(&format!("{}::pc", module))),
                            PExpr::ident(m(&format!("{}::{}", module, bare))),
                        )))
                    })
                    .collect();
                tests
                    .into_iter()
                    .reduce(|a, b| SForm::Or(Box::new(a), Box::new(b)))
                    .expect("at least one owner")
            }
            Atom::TerminatedSuccessfully(activity) => {
                check_activity(act, activity)?;
                SForm::And(
                    Box::new(SForm::Atom(Atom::Raw(PExpr::ident(m(&format!(
                        "{}::terminated",
                        act.name
                    )))))),
                    Box::new(SForm::Not(Box::new(SForm::Atom(Atom::Raw(PExpr::ident(
                        m(&format!("{}::to_be_failed", act.name)),
                    )))))),
                )
            }
            Atom::TerminatedOnFail(activity) => {
                check_activity(act, activity)?;
                SForm::And(
                    Box::new(SForm::Atom(Atom::Raw(PExpr::ident(m(&format!(
                        "{}::terminated",
                        act.name
                    )))))),
                    Box::new(SForm::Atom(Atom::Raw(PExpr::ident(m(&format!(
                        "{}::to_be_failed",
                        act.name
                    )))))),
                )
            }
            Atom::Failed(activity) => {
                check_activity(act, activity)?;
                SForm::Atom(Atom::Raw(PExpr::ident(m(&format!(
                    "{}::to_be_failed",
                    act.name
                )))))
            }
        },
    })
}

fn check_activity(act: &Activity, name: &str) -> Result<(), ResolveError> {
    if name == act.name {
        Ok(())
    } else {
        Err(ResolveError::UnknownActivity(name.to_string()))
    }
}

fn mangle_expr_names(e: &PExpr, mangle: bool) -> PExpr {
    if !mangle {
        return e.clone();
    }
    match e {
        PExpr::Ident(n) => PExpr::Ident(mangle_name(n)),
        PExpr::Not(x) => PExpr::Not(Box::new(mangle_expr_names(x, mangle))),
        PExpr::Neg(x) => PExpr::Neg(Box::new(mangle_expr_names(x, mangle))),
        PExpr::Bin(op, a, b) => PExpr::Bin(
            *op,
            Box::new(mangle_expr_names(a, mangle)),
            Box::new(mangle_expr_names(b, mangle)),
        ),
        lit => lit.clone(),
    }
}

fn check_labels(sf: &SForm, labels: &BTreeMap<String, SForm>) -> Result<(), ResolveError> {
    match sf {
        SForm::Atom(Atom::Label(name)) => {
            if labels.contains_key(name) {
                Ok(())
            } else {
                Err(ResolveError::UnknownLabel(name.clone()))
            }
        }
        SForm::Not(x) => check_labels(x, labels),
        SForm::And(a, b) | SForm::Or(a, b) => {
            check_labels(a, labels)?;
            check_labels(b, labels)
        }
        _ => Ok(()),
    }
}

fn expand_labels(
    sf: &SForm,
    labels: &BTreeMap<String, SForm>,
    trail: &mut Vec<String>,
) -> Result<SForm, ResolveError> {
    Ok(match sf {
        SForm::Atom(Atom::Label(name)) => {
            if trail.contains(name) {
                return Err(ResolveError::LabelCycle(name.clone()));
            }
            let body = labels
                .get(name)
                .ok_or_else(|| ResolveError::UnknownLabel(name.clone()))?;
            trail.push(name.clone());
            let out = expand_labels(body, labels, trail)?;
            trail.pop();
            out
        }
        SForm::Not(x) => SForm::Not(Box::new(expand_labels(x, labels, trail)?)),
        SForm::And(a, b) => SForm::And(
            Box::new(expand_labels(a, labels, trail)?),
            Box::new(expand_labels(b, labels, trail)?),
        ),
        SForm::Or(a, b) => SForm::Or(
            Box::new(expand_labels(a, labels, trail)?),
            Box::new(expand_labels(b, labels, trail)?),
        ),
        other => other.clone(),
    })
}

fn inline_prop_labels(
    ast: &PropAst,
    labels: &BTreeMap<String, SForm>,
) -> Result<PropAst, ResolveError> {
    let ex = |sf: &SForm| -> Result<SForm, ResolveError> {
        expand_labels(sf, labels, &mut Vec::new())
    };
    Ok(match ast {
        PropAst::Prob { bound, path } => PropAst::Prob {
            bound: *bound,
            path: match path {
                PathForm::Eventually(sf, b) => PathForm::Eventually(ex(sf)?, b.clone()),
                PathForm::Until(l, r, b) => PathForm::Until(ex(l)?, ex(r)?, b.clone()),
            },
        },
        PropAst::Reward { name, goal } => PropAst::Reward {
            name: name.clone(),
            goal: match goal {
                RewardGoal::Reach(sf) => RewardGoal::Reach(ex(sf)?),
                RewardGoal::Cumulative(t) => RewardGoal::Cumulative(t.clone()),
            },
        },
        PropAst::ForAll(sf) => PropAst::ForAll(ex(sf)?),
        PropAst::Filter { op, inner, cond } => PropAst::Filter {
            op: *op,
            inner: Box::new(inline_prop_labels(inner, labels)?),
            cond: ex(cond)?,
        },
        PropAst::Num(n) => PropAst::Num(n.clone()),
        PropAst::ConstRef(n) => PropAst::ConstRef(n.clone()),
        PropAst::Neg(a) => PropAst::Neg(Box::new(inline_prop_labels(a, labels)?)),
        PropAst::Add(a, b) => PropAst::Add(
            Box::new(inline_prop_labels(a, labels)?),
            Box::new(inline_prop_labels(b, labels)?),
        ),
        PropAst::Sub(a, b) => PropAst::Sub(
            Box::new(inline_prop_labels(a, labels)?),
            Box::new(inline_prop_labels(b, labels)?),
        ),
        PropAst::Mul(a, b) => PropAst::Mul(
            Box::new(inline_prop_labels(a, labels)?),
            Box::new(inline_prop_labels(b, labels)?),
        ),
        PropAst::Div(a, b) => PropAst::Div(
            Box::new(inline_prop_labels(a, labels)?),
            Box::new(inline_prop_labels(b, labels)?),
        ),
    })
}

// ---- rendering ------------------------------------------------------------------

fn fmt_bound_value(v: &BigRational) -> String {
    if v.is_integer() {
        v.to_integer().to_string()
    } else {
        fmt_real(v)
    }
}

fn render_bound(b: &Option<TimeBound>) -> String {
    match b {
        None => String::new(),
        Some(TimeBound::Le(t)) => format!("<={}", fmt_bound_value(t)),
        Some(TimeBound::Eq(t)) => format!("={}", fmt_bound_value(t)),
    }
}

/// Renders an atom-level expression with spaces around a single top-level
/// comparison, matching the style of resolved property text.
fn render_atom_expr(e: &PExpr) -> String {
    match e {
        PExpr::Bin(op, a, b) if is_cmp(*op) => {
            format!(
                "{} {} {}",
                render_operand(a),
                op.symbol(),
                render_operand(b)
            )
        }
        other => render_operand(other),
    }
}

fn is_cmp(op: PBinOp) -> bool {
    matches!(
        op,
        PBinOp::Eq | PBinOp::Ne | PBinOp::Lt | PBinOp::Le | PBinOp::Gt | PBinOp::Ge
    )
}

fn render_operand(e: &PExpr) -> String {
    match e {
        PExpr::Ident(n) => n.clone(),
        PExpr::Bool(b) => b.to_string(),
        PExpr::Int(i) => i.to_string(),
        PExpr::Real(r) => fmt_real(r),
        other => crate::emit::render_expr(other),
    }
}

/// Is this state formula simple enough to appear bare as an operand of a
/// boolean connective?
fn sform_is_simple(sf: &SForm) -> bool {
    matches!(
        sf,
        SForm::Bool(_)
            | SForm::Atom(Atom::Label(_))
            | SForm::Atom(Atom::Raw(PExpr::Ident(_)))
            | SForm::Atom(Atom::Raw(PExpr::Bool(_)))
    )
}

fn render_sform_grouped(sf: &SForm) -> String {
    if sform_is_simple(sf) {
        render_sform(sf)
    } else {
        format!("({})", render_sform(sf))
    }
}

pub fn render_sform(sf: &SForm) -> String {
    match sf {
        SForm::Bool(b) => b.to_string(),
        SForm::Atom(Atom::Label(name)) => format!("\"{}\"", name),
        SForm::Atom(Atom::Raw(e)) => render_atom_expr(e),
        SForm::Atom(Atom::ReachesAt { activity, node }) => {
            format!("{} reaches at {}", activity, node)
        }
        SForm::Atom(Atom::TerminatedSuccessfully(a)) => format!("{} terminated successfully", a),
        SForm::Atom(Atom::TerminatedOnFail(a)) => format!("{} terminated on fail", a),
        SForm::Atom(Atom::Failed(a)) => format!("{} failed", a),
        SForm::Not(x) => format!("!{}", render_sform_grouped(x)),
        SForm::And(a, b) => format!(
            "{} & {}",
            render_and_operand(a),
            render_and_operand(b)
        ),
        SForm::Or(a, b) => format!("{} | {}", render_or_operand(a), render_or_operand(b)),
    }
}

/// Operands of `&`: raw comparisons and `|` need parentheses, bare atoms and
/// negations do not.
fn render_and_operand(sf: &SForm) -> String {
    match sf {
        SForm::Or(_, _) => format!("({})", render_sform(sf)),
        SForm::Atom(Atom::Raw(e)) if !matches!(e, PExpr::Ident(_) | PExpr::Bool(_)) => {
            format!("({})", render_sform(sf))
        }
        SForm::And(_, _) => render_sform(sf),
        _ => render_sform(sf),
    }
}

/// Operands of `|`: `&` chains and raw comparisons take parentheses.
fn render_or_operand(sf: &SForm) -> String {
    match sf {
        SForm::And(_, _) => format!("({})", render_sform(sf)),
        SForm::Atom(Atom::Raw(e)) if !matches!(e, PExpr::Ident(_) | PExpr::Bool(_)) => {
            format!("({})", render_sform(sf))
        }
        SForm::Or(_, _) => render_sform(sf),
        _ => render_sform(sf),
    }
}

/// Renders a state formula at path-formula position, where a compound form
/// needs no parentheses only if it is the sole content of the brackets.
fn render_sform_in_path(sf: &SForm) -> String {
    render_sform(sf)
}

pub fn render_property(ast: &PropAst) -> String {
    render_prop_prec(ast, 0)
}

/// prec 0 = additive position, 1 = multiplicative, 2 = atom.
fn render_prop_prec(ast: &PropAst, prec: u8) -> String {
    let (text, my_prec): (String, u8) = match ast {
        PropAst::Prob { bound, path } => {
            let kw = match bound {
                ProbBound::Query => "P",
                ProbBound::Max => "Pmax",
                ProbBound::Min => "Pmin",
            };
            let body = match path {
                PathForm::Eventually(sf, b) => {
                    format!("F{} {}", render_bound(b), render_sform_in_path(sf))
                }
                PathForm::Until(l, r, b) => format!(
                    "{} U{} {}",
                    render_sform_grouped(l),
                    render_bound(b),
                    render_sform_grouped(r)
                ),
            };
            (format!("{}=? [{}]", kw, body), 2)
        }
        PropAst::Reward { name, goal } => {
            let n = match name {
                Some(n) => format!("R{{\"{}\"}}", n),
                None => "R".to_string(),
            };
            let body = match goal {
                RewardGoal::Reach(sf) => format!("F {}", render_sform_in_path(sf)),
                RewardGoal::Cumulative(t) => format!("C<={}", fmt_bound_value(t)),
            };
            (format!("{}=? [{}]", n, body), 2)
        }
        PropAst::ForAll(sf) => (format!("A [F {}]", render_sform_in_path(sf)), 2),
        PropAst::Filter { op, inner, cond } => {
            let opname = match op {
                FilterOp::Max => "max",
                FilterOp::Min => "min",
            };
            (
                format!(
                    "filter({}, {}, {})",
                    opname,
                    render_property(inner),
                    render_sform(cond)
                ),
                2,
            )
        }
        PropAst::Num(n) => (fmt_bound_value(n), 2),
        PropAst::ConstRef(n) => (n.clone(), 2),
        PropAst::Neg(a) => (format!("-{}", render_prop_prec(a, 2)), 1),
        PropAst::Add(a, b) => (
            format!("{} + {}", render_prop_prec(a, 0), render_prop_prec(b, 1)),
            0,
        ),
        PropAst::Sub(a, b) => (
            format!("{} - {}", render_prop_prec(a, 0), render_prop_prec(b, 1)),
            0,
        ),
        PropAst::Mul(a, b) => (
            format!("{}*{}", render_prop_prec(a, 1), render_prop_prec(b, 2)),
            1,
        ),
        PropAst::Div(a, b) => (
            format!("{} / {}", render_prop_prec(a, 1), render_prop_prec(b, 2)),
            1,
        ),
    };
    if my_prec < prec {
        format!("({})", text)
    } else {
        text
    }
}

/// Serializes a resolved group to `.props` text: label definitions first,
/// then one property per line (name as a comment).
pub fn emit_props(group: &ResolvedGroup) -> String {
    let mut out = String::new();
    for (name, sf) in &group.labels {
        out.push_str(&format!("label \"{}\" = {};\n", name, render_sform(sf)));
    }
    if !group.labels.is_empty() && !group.properties.is_empty() {
        out.push('\n');
    }
    for (name, prop) in &group.properties {
        out.push_str(&format!("// {}\n", name));
        out.push_str(&render_property(prop));
        out.push('\n');
    }
    out
}
