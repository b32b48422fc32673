//! The `.adl` textual format: lexer, recursive-descent parser, and the
//! canonical printer used for golden tests.
//!
//! The grammar is flat and mirrors the annotation slots of the domain model
//! one-to-one:
//!
//! ```text
//! file      := activity+
//! activity  := "activity" NAME "(" [param ("," param)* [","]] ")" "{" item* "}"
//! param     := NAME ":" ("real" | "int" | "bool") ["=" expr]
//! item      := nodeDecl | edgeDecl | propGroup | "verify" NAME ";"
//! nodeDecl  := ("initial"|"final"|"flowfinal"|"fork"|"join"|"merge"
//!               |"decision"|"action") NAME [annots] ";"
//! annots    := "{" (annot ";")* "}"
//! annot     := ("reliability"|"duration"|"rate") "=" expr
//!            | "reward" NAME "=" expr
//! edgeDecl  := "edge" NAME ":" NAME "->" NAME [eannots] ";"
//! eannots   := "{" (eannot ";")* "}"
//! eannot    := "prob" "=" expr | "guard" "=" (expr | "else")
//!            | "reward" NAME "=" expr
//! propGroup := "properties" NAME ":" ("dtmc"|"mdp"|"ctmc") "{" (labelDecl | propDecl)* "}"
//! labelDecl := "label" STRING "=" STRING ";"
//! propDecl  := STRING "=" STRING ";"
//! ```
//!
//! `final` declares an activity-final node, `flowfinal` a flow-final node.
//! Comments are `//` to end of line and `/* ... */`. Property bodies are
//! opaque strings at this level; the property resolver parses them later.

use std::fmt;

use num_bigint::BigInt;

use crate::activity::{
    Activity, ActivityFile, Edge, Guard, ModelType, Node, NodeKind, Parameter, ParamType,
    PropertyGroup,
};
use crate::expr::{rational_from_decimal_str, CmpOp, Expr};

/// Location of a token or error inside a source file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceSpan {
    pub file: String,
    /// 1-based line.
    pub line: u32,
    /// 1-based column.
    pub column: u32,
    pub length: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub span: SourceSpan,
    pub message: String,
    pub expected: Vec<String>,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}:{}:{}: {}",
            self.span.file, self.span.line, self.span.column, self.message
        )?;
        if !self.expected.is_empty() {
            write!(f, " (expected {})", self.expected.join(", "))?;
        }
        Ok(())
    }
}

impl std::error::Error for ParseError {}

const KEYWORDS: &[&str] = &[
    "activity", "initial", "final", "flowfinal", "fork", "join", "merge", "decision", "action",
    "edge", "properties", "label", "verify", "real", "int", "bool", "dtmc", "mdp", "ctmc",
    "reliability", "duration", "rate", "reward", "prob", "guard", "else", "true", "false",
];

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Number(String),
    Str(String),
    Sym(&'static str),
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Number(s) => format!("number `{s}`"),
            Tok::Str(_) => "string".to_string(),
            Tok::Sym(s) => format!("`{s}`"),
            Tok::Eof => "end of input".to_string(),
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: u32,
    column: u32,
    length: u32,
}

struct Lexer<'a> {
    file: &'a str,
    chars: Vec<char>,
    pos: usize,
    line: u32,
    column: u32,
}

impl<'a> Lexer<'a> {
    fn new(file: &'a str, text: &str) -> Self {
        Lexer {
            file,
            chars: text.chars().collect(),
            pos: 0,
            line: 1,
            column: 1,
        }
    }

    fn span_here(&self, length: u32) -> SourceSpan {
        SourceSpan {
            file: self.file.to_string(),
            line: self.line,
            column: self.column,
            length,
        }
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn peek2(&self) -> Option<char> {
        self.chars.get(self.pos + 1).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += 1;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn error(&self, msg: impl Into<String>) -> ParseError {
        ParseError {
            span: self.span_here(1),
            message: msg.into(),
            expected: Vec::new(),
        }
    }

    fn lex(mut self) -> Result<Vec<Token>, ParseError> {
        let mut out = Vec::new();
        loop {
            // Skip whitespace and comments.
            loop {
                match self.peek() {
                    Some(c) if c.is_whitespace() => {
                        self.bump();
                    }
                    Some('/') if self.peek2() == Some('/') => {
                        while let Some(c) = self.peek() {
                            if c == '\n' {
                                break;
                            }
                            self.bump();
                        }
                    }
                    Some('/') if self.peek2() == Some('*') => {
                        let start = self.span_here(2);
                        self.bump();
                        self.bump();
                        let mut closed = false;
                        while let Some(c) = self.bump() {
                            if c == '*' && self.peek() == Some('/') {
                                self.bump();
                                closed = true;
                                break;
                            }
                        }
                        if !closed {
                            return Err(ParseError {
                                span: start,
                                message: "unterminated block comment".to_string(),
                                expected: Vec::new(),
                            });
                        }
                    }
                    _ => break,
                }
            }
            let (line, column) = (self.line, self.column);
            let Some(c) = self.peek() else {
                out.push(Token { tok: Tok::Eof, line, column, length: 0 });
                return Ok(out);
            };
            let tok = if c.is_ascii_alphabetic() || c == '_' {
                let mut s = String::new();
                while let Some(c) = self.peek() {
                    if c.is_ascii_alphanumeric() || c == '_' {
                        s.push(c);
                        self.bump();
                    } else {
                        break;
                    }
                }
                Tok::Ident(s)
            } else if c.is_ascii_digit() {
                let mut s = String::new();
                while let Some(c) = self.peek() {
                    if c.is_ascii_digit() {
                        s.push(c);
                        self.bump();
                    } else {
                        break;
                    }
                }
                if self.peek() == Some('.') && self.peek2().is_some_and(|c| c.is_ascii_digit()) {
                    s.push('.');
                    self.bump();
                    while let Some(c) = self.peek() {
                        if c.is_ascii_digit() {
                            s.push(c);
                            self.bump();
                        } else {
                            break;
                        }
                    }
                }
                if matches!(self.peek(), Some('e') | Some('E')) {
                    let after = self.peek2();
                    let signed = matches!(after, Some('+') | Some('-'));
                    let digit_after_sign = signed
                        && self
                            .chars
                            .get(self.pos + 2)
                            .is_some_and(|c| c.is_ascii_digit());
                    if after.is_some_and(|c| c.is_ascii_digit()) || digit_after_sign {
                        s.push('e');
                        self.bump();
                        if signed {
                            s.push(self.bump().unwrap());
                        }
                        while let Some(c) = self.peek() {
                            if c.is_ascii_digit() {
                                s.push(c);
                                self.bump();
                            } else {
                                break;
                            }
                        }
                    }
                }
                Tok::Number(s)
            } else if c == '"' {
                self.bump();
                let mut s = String::new();
                loop {
                    match self.bump() {
                        None | Some('\n') => {
                            return Err(ParseError {
                                span: SourceSpan {
                                    file: self.file.to_string(),
                                    line,
                                    column,
                                    length: 1,
                                },
                                message: "unterminated string literal".to_string(),
                                expected: Vec::new(),
                            })
                        }
                        Some('"') => break,
                        Some('\\') => match self.bump() {
                            Some('"') => s.push('"'),
                            Some('\\') => s.push('\\'),
                            Some('n') => s.push('\n'),
                            Some('t') => s.push('\t'),
                            other => {
                                return Err(self.error(format!(
                                    "unknown escape sequence `\\{}`",
                                    other.map(String::from).unwrap_or_default()
                                )))
                            }
                        },
                        Some(c) => s.push(c),
                    }
                }
                Tok::Str(s)
            } else {
                let sym: &'static str = match c {
                    '(' => "(",
                    ')' => ")",
                    '{' => "{",
                    '}' => "}",
                    ';' => ";",
                    ',' => ",",
                    '+' => "+",
                    '*' => "*",
                    '/' => "/",
                    '&' => "&",
                    '|' => "|",
                    '=' => "=",
                    '-' => {
                        if self.peek2() == Some('>') {
                            self.bump();
                            self.bump();
                            out.push(Token { tok: Tok::Sym("->"), line, column, length: 2 });
                            continue;
                        }
                        "-"
                    }
                    ':' => {
                        if self.peek2() == Some(':') {
                            self.bump();
                            self.bump();
                            out.push(Token { tok: Tok::Sym("::"), line, column, length: 2 });
                            continue;
                        }
                        ":"
                    }
                    '<' => {
                        if self.peek2() == Some('=') {
                            self.bump();
                            self.bump();
                            out.push(Token { tok: Tok::Sym("<="), line, column, length: 2 });
                            continue;
                        }
                        "<"
                    }
                    '>' => {
                        if self.peek2() == Some('=') {
                            self.bump();
                            self.bump();
                            out.push(Token { tok: Tok::Sym(">="), line, column, length: 2 });
                            continue;
                        }
                        ">"
                    }
                    '!' => {
                        if self.peek2() == Some('=') {
                            self.bump();
                            self.bump();
                            out.push(Token { tok: Tok::Sym("!="), line, column, length: 2 });
                            continue;
                        }
                        "!"
                    }
                    other => return Err(self.error(format!("unexpected character `{other}`"))),
                };
                self.bump();
                out.push(Token { tok: Tok::Sym(sym), line, column, length: 1 });
                continue;
            };
            let length = match &tok {
                Tok::Ident(s) | Tok::Number(s) => s.len() as u32,
                Tok::Str(s) => s.len() as u32 + 2,
                _ => 1,
            };
            out.push(Token { tok, line, column, length });
        }
    }
}

struct Parser {
    file: String,
    tokens: Vec<Token>,
    pos: usize,
    errors: Vec<ParseError>,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn span_of(&self, t: &Token) -> SourceSpan {
        SourceSpan {
            file: self.file.clone(),
            line: t.line,
            column: t.column,
            length: t.length,
        }
    }

    fn error_at(&self, t: &Token, message: String, expected: Vec<String>) -> ParseError {
        ParseError { span: self.span_of(t), message, expected }
    }

    fn fail<T>(&self, message: &str, expected: &[&str]) -> Result<T, ParseError> {
        let t = self.peek();
        Err(self.error_at(
            t,
            format!("{message}, found {}", t.tok.describe()),
            expected.iter().map(|s| s.to_string()).collect(),
        ))
    }

    fn expect_sym(&mut self, sym: &str) -> Result<Token, ParseError> {
        if self.peek().tok == Tok::Sym(match_sym(sym)) {
            Ok(self.bump())
        } else {
            self.fail(&format!("expected `{sym}`"), &[sym])
        }
    }

    fn at_sym(&self, sym: &str) -> bool {
        self.peek().tok == Tok::Sym(match_sym(sym))
    }

    fn eat_sym(&mut self, sym: &str) -> bool {
        if self.at_sym(sym) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn at_keyword(&self, kw: &str) -> bool {
        matches!(&self.peek().tok, Tok::Ident(s) if s == kw)
    }

    fn eat_keyword(&mut self, kw: &str) -> bool {
        if self.at_keyword(kw) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_keyword(&mut self, kw: &str) -> Result<Token, ParseError> {
        if self.at_keyword(kw) {
            Ok(self.bump())
        } else {
            self.fail(&format!("expected `{kw}`"), &[kw])
        }
    }

    /// A name: an identifier that is not a reserved keyword.
    fn expect_name(&mut self, what: &str) -> Result<(String, Token), ParseError> {
        match &self.peek().tok {
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                let s = s.clone();
                Ok((s, self.bump()))
            }
            Tok::Ident(s) => {
                let t = self.peek();
                Err(self.error_at(
                    t,
                    format!("keyword `{s}` cannot be used as {what}"),
                    vec!["identifier".to_string()],
                ))
            }
            _ => self.fail(&format!("expected {what}"), &["identifier"]),
        }
    }

    fn expect_string(&mut self) -> Result<(String, Token), ParseError> {
        match &self.peek().tok {
            Tok::Str(s) => {
                let s = s.clone();
                Ok((s, self.bump()))
            }
            _ => self.fail("expected string literal", &["string"]),
        }
    }

    // ---- expressions ----

    fn parse_expr(&mut self) -> Result<Expr, ParseError> {
        self.parse_or()
    }

    fn parse_or(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.parse_and()?;
        while self.eat_sym("|") {
            let rhs = self.parse_and()?;
            lhs = Expr::Or(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn parse_and(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.parse_not()?;
        while self.eat_sym("&") {
            let rhs = self.parse_not()?;
            lhs = Expr::And(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn parse_not(&mut self) -> Result<Expr, ParseError> {
        if self.eat_sym("!") {
            Ok(Expr::Not(Box::new(self.parse_not()?)))
        } else {
            self.parse_cmp()
        }
    }

    fn parse_cmp(&mut self) -> Result<Expr, ParseError> {
        let lhs = self.parse_add()?;
        let op = match &self.peek().tok {
            Tok::Sym("<") => CmpOp::Lt,
            Tok::Sym("<=") => CmpOp::Le,
            Tok::Sym(">") => CmpOp::Gt,
            Tok::Sym(">=") => CmpOp::Ge,
            Tok::Sym("=") => CmpOp::Eq,
            Tok::Sym("!=") => CmpOp::Ne,
            _ => return Ok(lhs),
        };
        self.bump();
        let rhs = self.parse_add()?;
        Ok(Expr::Cmp(op, Box::new(lhs), Box::new(rhs)))
    }

    fn parse_add(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.parse_mul()?;
        loop {
            if self.eat_sym("+") {
                let rhs = self.parse_mul()?;
                lhs = Expr::Add(Box::new(lhs), Box::new(rhs));
            } else if self.eat_sym("-") {
                let rhs = self.parse_mul()?;
                lhs = Expr::Sub(Box::new(lhs), Box::new(rhs));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn parse_mul(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.parse_unary()?;
        loop {
            if self.eat_sym("*") {
                let rhs = self.parse_unary()?;
                lhs = Expr::Mul(Box::new(lhs), Box::new(rhs));
            } else if self.eat_sym("/") {
                let rhs = self.parse_unary()?;
                lhs = Expr::Div(Box::new(lhs), Box::new(rhs));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn parse_unary(&mut self) -> Result<Expr, ParseError> {
        if self.eat_sym("-") {
            Ok(Expr::Neg(Box::new(self.parse_unary()?)))
        } else {
            self.parse_atom()
        }
    }

    fn parse_atom(&mut self) -> Result<Expr, ParseError> {
        match self.peek().tok.clone() {
            Tok::Number(s) => {
                let t = self.bump();
                let is_real = s.contains('.') || s.contains('e') || s.contains('E');
                match rational_from_decimal_str(&s) {
                    Some(r) if is_real => Ok(Expr::Real(r)),
                    Some(r) => Ok(Expr::Int(r.to_integer())),
                    None => Err(self.error_at(&t, format!("malformed number `{s}`"), vec![])),
                }
            }
            Tok::Ident(s) if s == "true" => {
                self.bump();
                Ok(Expr::Bool(true))
            }
            Tok::Ident(s) if s == "false" => {
                self.bump();
                Ok(Expr::Bool(false))
            }
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                self.bump();
                Ok(Expr::Param(s))
            }
            Tok::Sym("(") => {
                self.bump();
                let e = self.parse_expr()?;
                self.expect_sym(")")?;
                Ok(e)
            }
            _ => self.fail("expected an expression", &["number", "identifier", "("]),
        }
    }

    // ---- declarations ----

    fn parse_parameter(&mut self) -> Result<(Parameter, Token), ParseError> {
        let (name, tok) = self.expect_name("a parameter name")?;
        self.expect_sym(":")?;
        let ptype = if self.eat_keyword("real") {
            ParamType::Real
        } else if self.eat_keyword("int") {
            ParamType::Int
        } else if self.eat_keyword("bool") {
            ParamType::Bool
        } else {
            return self.fail("expected a parameter type", &["real", "int", "bool"]);
        };
        let default_value = if self.eat_sym("=") {
            Some(self.parse_expr()?)
        } else {
            None
        };
        Ok((Parameter { name, ptype, default_value }, tok))
    }

    fn parse_node_annots(&mut self, node: &mut Node) -> Result<(), ParseError> {
        self.expect_sym("{")?;
        while !self.eat_sym("}") {
            let t = self.peek().clone();
            if self.eat_keyword("reliability") {
                self.expect_sym("=")?;
                let e = self.parse_expr()?;
                if node.reliability.replace(e).is_some() {
                    self.errors.push(self.error_at(
                        &t,
                        format!("duplicate `reliability` annotation on node `{}`", node.name),
                        vec![],
                    ));
                }
            } else if self.eat_keyword("duration") {
                self.expect_sym("=")?;
                let e = self.parse_expr()?;
                if node.duration.replace(e).is_some() {
                    self.errors.push(self.error_at(
                        &t,
                        format!("duplicate `duration` annotation on node `{}`", node.name),
                        vec![],
                    ));
                }
            } else if self.eat_keyword("rate") {
                self.expect_sym("=")?;
                let e = self.parse_expr()?;
                if node.rate.replace(e).is_some() {
                    self.errors.push(self.error_at(
                        &t,
                        format!("duplicate `rate` annotation on node `{}`", node.name),
                        vec![],
                    ));
                }
            } else if self.eat_keyword("reward") {
                let (rname, _) = self.expect_name("a reward name")?;
                self.expect_sym("=")?;
                let e = self.parse_expr()?;
                node.rewards.push((rname, e));
            } else {
                return self.fail(
                    "expected a node annotation",
                    &["reliability", "duration", "rate", "reward"],
                );
            }
            self.expect_sym(";")?;
        }
        Ok(())
    }

    fn parse_edge_annots(&mut self, edge: &mut Edge) -> Result<(), ParseError> {
        self.expect_sym("{")?;
        while !self.eat_sym("}") {
            let t = self.peek().clone();
            if self.eat_keyword("prob") {
                self.expect_sym("=")?;
                let e = self.parse_expr()?;
                if edge.prob.replace(e).is_some() {
                    self.errors.push(self.error_at(
                        &t,
                        format!("duplicate `prob` annotation on edge `{}`", edge.name),
                        vec![],
                    ));
                }
            } else if self.eat_keyword("guard") {
                self.expect_sym("=")?;
                let g = if self.eat_keyword("else") {
                    Guard::Else
                } else {
                    Guard::Expr(self.parse_expr()?)
                };
                if edge.guard.replace(g).is_some() {
                    self.errors.push(self.error_at(
                        &t,
                        format!("duplicate `guard` annotation on edge `{}`", edge.name),
                        vec![],
                    ));
                }
            } else if self.eat_keyword("reward") {
                let (rname, _) = self.expect_name("a reward name")?;
                self.expect_sym("=")?;
                let e = self.parse_expr()?;
                edge.rewards.push((rname, e));
            } else {
                return self.fail(
                    "expected an edge annotation",
                    &["prob", "guard", "reward"],
                );
            }
            self.expect_sym(";")?;
        }
        Ok(())
    }

    fn parse_property_group(&mut self) -> Result<PropertyGroup, ParseError> {
        let (name, _) = self.expect_name("a property group name")?;
        self.expect_sym(":")?;
        let model_type = if self.eat_keyword("dtmc") {
            ModelType::Dtmc
        } else if self.eat_keyword("mdp") {
            ModelType::Mdp
        } else if self.eat_keyword("ctmc") {
            ModelType::Ctmc
        } else {
            return self.fail("expected a model type", &["dtmc", "mdp", "ctmc"]);
        };
        let mut group = PropertyGroup {
            name,
            model_type,
            labels: Vec::new(),
            properties: Vec::new(),
        };
        self.expect_sym("{")?;
        while !self.eat_sym("}") {
            if self.eat_keyword("label") {
                let (lname, ltok) = self.expect_string()?;
                self.expect_sym("=")?;
                let (body, _) = self.expect_string()?;
                self.expect_sym(";")?;
                if group.labels.iter().any(|(n, _)| *n == lname) {
                    self.errors.push(self.error_at(
                        &ltok,
                        format!("duplicate label \"{lname}\" in group `{}`", group.name),
                        vec![],
                    ));
                }
                group.labels.push((lname, body));
            } else if matches!(self.peek().tok, Tok::Str(_)) {
                let (pname, ptok) = self.expect_string()?;
                self.expect_sym("=")?;
                let (body, _) = self.expect_string()?;
                self.expect_sym(";")?;
                if group.properties.iter().any(|(n, _)| *n == pname) {
                    self.errors.push(self.error_at(
                        &ptok,
                        format!("duplicate property \"{pname}\" in group `{}`", group.name),
                        vec![],
                    ));
                }
                group.properties.push((pname, body));
            } else {
                return self.fail(
                    "expected a label or property declaration",
                    &["label", "string"],
                );
            }
        }
        Ok(group)
    }

    fn parse_activity(&mut self) -> Result<Activity, ParseError> {
        self.expect_keyword("activity")?;
        let (name, _) = self.expect_name("an activity name")?;
        let mut act = Activity {
            name,
            parameters: Vec::new(),
            nodes: Vec::new(),
            edges: Vec::new(),
            property_groups: Vec::new(),
            to_be_verified: None,
        };
        self.expect_sym("(")?;
        if !self.at_sym(")") {
            loop {
                let (param, tok) = self.parse_parameter()?;
                if act.parameters.iter().any(|p| p.name == param.name) {
                    self.errors.push(self.error_at(
                        &tok,
                        format!("duplicate parameter `{}`", param.name),
                        vec![],
                    ));
                }
                self.check_parameter_default(&param, &tok);
                act.parameters.push(param);
                if !self.eat_sym(",") {
                    break;
                }
                if self.at_sym(")") {
                    break; // trailing comma
                }
            }
        }
        self.expect_sym(")")?;
        self.expect_sym("{")?;

        let mut edge_spans: Vec<SourceSpan> = Vec::new();
        let mut verify_seen = false;
        let mut verify_span: Option<SourceSpan> = None;
        while !self.eat_sym("}") {
            let t = self.peek().clone();
            let node_kind = match &t.tok {
                Tok::Ident(s) => match s.as_str() {
                    "initial" => Some(NodeKind::Initial),
                    "final" => Some(NodeKind::ActivityFinal),
                    "flowfinal" => Some(NodeKind::FlowFinal),
                    "fork" => Some(NodeKind::Fork),
                    "join" => Some(NodeKind::Join),
                    "merge" => Some(NodeKind::Merge),
                    "decision" => Some(NodeKind::Decision),
                    "action" => Some(NodeKind::OpaqueAction),
                    _ => None,
                },
                _ => None,
            };
            if let Some(kind) = node_kind {
                self.bump();
                let (nname, ntok) = self.expect_name("a node name")?;
                if act.nodes.iter().any(|n| n.name == nname) {
                    self.errors.push(self.error_at(
                        &ntok,
                        format!("duplicate node name `{nname}`"),
                        vec![],
                    ));
                }
                let mut node = Node::plain(&nname, kind);
                if self.at_sym("{") {
                    if kind != NodeKind::OpaqueAction {
                        self.errors.push(self.error_at(
                            &ntok,
                            format!(
                                "annotations are only allowed on action nodes, `{nname}` is {}",
                                kind.keyword()
                            ),
                            vec![],
                        ));
                    }
                    self.parse_node_annots(&mut node)?;
                }
                self.expect_sym(";")?;
                act.nodes.push(node);
            } else if self.eat_keyword("edge") {
                let (ename, etok) = self.expect_name("an edge name")?;
                if act.edges.iter().any(|e| e.name == ename) {
                    self.errors.push(self.error_at(
                        &etok,
                        format!("duplicate edge name `{ename}`"),
                        vec![],
                    ));
                }
                self.expect_sym(":")?;
                let (source, _) = self.expect_name("a source node name")?;
                self.expect_sym("->")?;
                let (target, _) = self.expect_name("a target node name")?;
                let mut edge = Edge::plain(&ename, &source, &target);
                if self.at_sym("{") {
                    self.parse_edge_annots(&mut edge)?;
                }
                self.expect_sym(";")?;
                edge_spans.push(self.span_of(&etok));
                act.edges.push(edge);
            } else if self.eat_keyword("properties") {
                let gtok = t.clone();
                let group = self.parse_property_group()?;
                if act.property_groups.iter().any(|g| g.name == group.name) {
                    self.errors.push(self.error_at(
                        &gtok,
                        format!("duplicate property group `{}`", group.name),
                        vec![],
                    ));
                }
                act.property_groups.push(group);
            } else if self.eat_keyword("verify") {
                let (gname, gtok) = self.expect_name("a property group name")?;
                self.expect_sym(";")?;
                if verify_seen {
                    self.errors.push(self.error_at(
                        &gtok,
                        "duplicate `verify` declaration".to_string(),
                        vec![],
                    ));
                } else {
                    verify_span = Some(self.span_of(&gtok));
                    act.to_be_verified = Some(gname);
                    verify_seen = true;
                }
            } else {
                return self.fail(
                    "expected a declaration",
                    &[
                        "initial", "final", "flowfinal", "fork", "join", "merge", "decision",
                        "action", "edge", "properties", "verify", "}",
                    ],
                );
            }
        }

        // Deferred structural checks: edge endpoints may reference nodes
        // declared later in the file, so they are resolved here.
        for (edge, span) in act.edges.iter().zip(&edge_spans) {
            for endpoint in [&edge.source, &edge.target] {
                if act.node(endpoint).is_none() {
                    self.errors.push(ParseError {
                        span: span.clone(),
                        message: format!(
                            "edge `{}` references undeclared node `{endpoint}`",
                            edge.name
                        ),
                        expected: Vec::new(),
                    });
                }
            }
        }
        if let Some(g) = &act.to_be_verified {
            if act.property_group(g).is_none() {
                self.errors.push(ParseError {
                    span: verify_span.unwrap(),
                    message: format!("`verify` names unknown property group `{g}`"),
                    expected: Vec::new(),
                });
            }
        }
        Ok(act)
    }

    /// A parameter default must be a closed expression of the parameter's
    /// type (integers are accepted where reals are expected).
    fn check_parameter_default(&mut self, param: &Parameter, tok: &Token) {
        let Some(default) = &param.default_value else { return };
        match default.eval(&Default::default()) {
            Ok(v) => {
                let ok = match (param.ptype, &v) {
                    (ParamType::Real, crate::expr::Value::Num(_)) => true,
                    (ParamType::Int, crate::expr::Value::Num(r)) => r.is_integer(),
                    (ParamType::Bool, crate::expr::Value::Bool(_)) => true,
                    _ => false,
                };
                if !ok {
                    self.errors.push(self.error_at(
                        tok,
                        format!(
                            "default value of parameter `{}` does not have type {}",
                            param.name,
                            param.ptype.keyword()
                        ),
                        vec![],
                    ));
                }
            }
            Err(e) => {
                self.errors.push(self.error_at(
                    tok,
                    format!(
                        "default value of parameter `{}` is not a closed expression: {e}",
                        param.name
                    ),
                    vec![],
                ));
            }
        }
    }
}

fn match_sym(s: &str) -> &'static str {
    match s {
        "(" => "(",
        ")" => ")",
        "{" => "{",
        "}" => "}",
        ";" => ";",
        ":" => ":",
        "," => ",",
        "->" => "->",
        "::" => "::",
        "=" => "=",
        "+" => "+",
        "-" => "-",
        "*" => "*",
        "/" => "/",
        "&" => "&",
        "|" => "|",
        "!" => "!",
        "<" => "<",
        "<=" => "<=",
        ">" => ">",
        ">=" => ">=",
        "!=" => "!=",
        _ => unreachable!("unknown symbol {s}"),
    }
}

/// Parses `.adl` source text. `file` is used in error spans only.
pub fn parse_activity_file(file: &str, text: &str) -> Result<ActivityFile, Vec<ParseError>> {
    let tokens = Lexer::new(file, text).lex().map_err(|e| vec![e])?;
    let mut parser = Parser {
        file: file.to_string(),
        tokens,
        pos: 0,
        errors: Vec::new(),
    };
    let mut activities = Vec::new();
    loop {
        match parser.parse_activity() {
            Ok(act) => activities.push(act),
            Err(e) => {
                parser.errors.push(e);
                break;
            }
        }
        if parser.peek().tok == Tok::Eof {
            break;
        }
    }
    if activities.is_empty() && parser.errors.is_empty() {
        parser.errors.push(ParseError {
            span: SourceSpan { file: file.to_string(), line: 1, column: 1, length: 0 },
            message: "expected at least one activity".to_string(),
            expected: vec!["activity".to_string()],
        });
    }
    if parser.errors.is_empty() {
        Ok(ActivityFile { activities })
    } else {
        Err(parser.errors)
    }
}

fn escape_string(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
    out
}

/// Renders a file in canonical form: parameters first (one per line when
/// present), then nodes, edges, property groups, and the `verify`
/// declaration, each in declaration order. `parse(render(parse(f)))` equals
/// `parse(f)` for every parseable `f`.
pub fn render_activity_file(file: &ActivityFile) -> String {
    let mut out = String::new();
    for (i, act) in file.activities.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        render_activity(act, &mut out);
    }
    out
}

fn render_activity(act: &Activity, out: &mut String) {
    if act.parameters.is_empty() {
        out.push_str(&format!("activity {}() {{\n", act.name));
    } else {
        out.push_str(&format!("activity {}(\n", act.name));
        for p in &act.parameters {
            out.push_str(&format!("    {}: {}", p.name, p.ptype.keyword()));
            if let Some(d) = &p.default_value {
                out.push_str(&format!(" = {d}"));
            }
            out.push_str(",\n");
        }
        out.push_str(") {\n");
    }
    for n in &act.nodes {
        out.push_str(&format!("    {} {}", n.kind.keyword(), n.name));
        let mut annots: Vec<String> = Vec::new();
        if let Some(e) = &n.reliability {
            annots.push(format!("reliability = {e};"));
        }
        if let Some(e) = &n.duration {
            annots.push(format!("duration = {e};"));
        }
        if let Some(e) = &n.rate {
            annots.push(format!("rate = {e};"));
        }
        for (rname, e) in &n.rewards {
            annots.push(format!("reward {rname} = {e};"));
        }
        if !annots.is_empty() {
            out.push_str(&format!(" {{ {} }}", annots.join(" ")));
        }
        out.push_str(";\n");
    }
    for e in &act.edges {
        out.push_str(&format!("    edge {}: {} -> {}", e.name, e.source, e.target));
        let mut annots: Vec<String> = Vec::new();
        if let Some(p) = &e.prob {
            annots.push(format!("prob = {p};"));
        }
        match &e.guard {
            Some(Guard::Expr(g)) => annots.push(format!("guard = {g};")),
            Some(Guard::Else) => annots.push("guard = else;".to_string()),
            None => {}
        }
        for (rname, expr) in &e.rewards {
            annots.push(format!("reward {rname} = {expr};"));
        }
        if !annots.is_empty() {
            out.push_str(&format!(" {{ {} }}", annots.join(" ")));
        }
        out.push_str(";\n");
    }
    for g in &act.property_groups {
        out.push_str(&format!(
            "    properties {}: {} {{\n",
            g.name,
            g.model_type.keyword()
        ));
        for (lname, body) in &g.labels {
            out.push_str(&format!(
                "        label \"{}\" = \"{}\";\n",
                escape_string(lname),
                escape_string(body)
            ));
        }
        for (pname, body) in &g.properties {
            out.push_str(&format!(
                "        \"{}\" = \"{}\";\n",
                escape_string(pname),
                escape_string(body)
            ));
        }
        out.push_str("    }\n");
    }
    if let Some(v) = &act.to_be_verified {
        out.push_str(&format!("    verify {v};\n"));
    }
    out.push_str("}\n");
}

/// Convenience: parse a number literal string as the parser would.
pub fn literal_expr(s: &str) -> Option<Expr> {
    let is_real = s.contains('.') || s.contains('e') || s.contains('E');
    let r = rational_from_decimal_str(s)?;
    Some(if is_real {
        Expr::Real(r)
    } else {
        Expr::Int(BigInt::from(r.to_integer()))
    })
}
