//! Parser for the PRISM model subset the toolchain reads and writes:
//! `dtmc`/`mdp`/`ctmc` models with constants, globals, formulas, modules of
//! bounded-integer and boolean variables, guarded commands, and
//! action-labeled reward structures.
//!
//! Guards keep their authored shape: the parser splits a guard on `&` at
//! parenthesis depth zero and parses each segment as one conjunct, so a model
//! emitted by this crate re-parses into the identical structure. Formula
//! bodies split the same way on top-level `|`.

use num_bigint::BigInt;
use thiserror::Error;

use admc_core::activity::ModelType;
use admc_core::expr::rational_from_decimal_str;

use crate::ast::{
    Command, ConstType, ConstantDecl, Formula, PBinOp, PExpr, PrismModel, PrismModule,
    RewardItem, RewardStruct, Update, VarDecl, VarType,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}:{col}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Num(String),
    Str(String),
    LBracket,
    RBracket,
    LParen,
    RParen,
    Semi,
    Colon,
    Prime,
    Comma,
    DotDot,
    Arrow,
    Eq,
    Neq,
    Lt,
    Le,
    Gt,
    Ge,
    Amp,
    Pipe,
    Not,
    Plus,
    Minus,
    Star,
    Slash,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{}`", s),
            Tok::Num(s) => format!("number `{}`", s),
            Tok::Str(s) => format!("string \"{}\"", s),
            Tok::LBracket => "`[`".into(),
            Tok::RBracket => "`]`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Semi => "`;`".into(),
            Tok::Colon => "`:`".into(),
            Tok::Prime => "`'`".into(),
            Tok::Comma => "`,`".into(),
            Tok::DotDot => "`..`".into(),
            Tok::Arrow => "`->`".into(),
            Tok::Eq => "`=`".into(),
            Tok::Neq => "`!=`".into(),
            Tok::Lt => "`<`".into(),
            Tok::Le => "`<=`".into(),
            Tok::Gt => "`>`".into(),
            Tok::Ge => "`>=`".into(),
            Tok::Amp => "`&`".into(),
            Tok::Pipe => "`|`".into(),
            Tok::Not => "`!`".into(),
            Tok::Plus => "`+`".into(),
            Tok::Minus => "`-`".into(),
            Tok::Star => "`*`".into(),
            Tok::Slash => "`/`".into(),
        }
    }
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
    line: usize,
    col: usize,
}

type Spanned = (Tok, usize, usize);

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer {
            src: src.as_bytes(),
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

    fn bump(&mut self) -> u8 {
        let c = self.src[self.pos];
        self.pos += 1;
        if c == b'\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        c
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn peek2(&self) -> Option<u8> {
        self.src.get(self.pos + 1).copied()
    }

    fn tokenize(mut self) -> Result<Vec<Spanned>, ParseError> {
        let mut out = Vec::new();
        while let Some(c) = self.peek() {
            if c.is_ascii_whitespace() {
                self.bump();
                continue;
            }
            if c == b'/' && self.peek2() == Some(b'/') {
                while let Some(c) = self.peek() {
                    if c == b'\n' {
                        break;
                    }
                    self.bump();
                }
                continue;
            }
            let (line, col) = (self.line, self.col);
            let tok = self.next_token()?;
            out.push((tok, line, col));
        }
        Ok(out)
    }

    fn next_token(&mut self) -> Result<Tok, ParseError> {
        let c = self.peek().unwrap();
        if c.is_ascii_alphabetic() || c == b'_' {
            let start = self.pos;
            while let Some(c) = self.peek() {
                if c.is_ascii_alphanumeric() || c == b'_' {
                    self.bump();
                } else {
                    break;
                }
            }
            return Ok(Tok::Ident(
                String::from_utf8_lossy(&self.src[start..self.pos]).into_owned(),
            ));
        }
        if c.is_ascii_digit() {
            return self.lex_number();
        }
        if c == b'"' {
            self.bump();
            let start = self.pos;
            while let Some(c) = self.peek() {
                if c == b'"' {
                    let s = String::from_utf8_lossy(&self.src[start..self.pos]).into_owned();
                    self.bump();
                    return Ok(Tok::Str(s));
                }
                self.bump();
            }
            return Err(self.error("unterminated string literal"));
        }
        self.bump();
        let two = |l: &mut Lexer, tok| {
            l.bump();
            Ok(tok)
        };
        match c {
            b'[' => Ok(Tok::LBracket),
            b']' => Ok(Tok::RBracket),
            b'(' => Ok(Tok::LParen),
            b')' => Ok(Tok::RParen),
            b';' => Ok(Tok::Semi),
            b':' => Ok(Tok::Colon),
            b'\'' => Ok(Tok::Prime),
            b',' => Ok(Tok::Comma),
            b'.' if self.peek() == Some(b'.') => two(self, Tok::DotDot),
            b'-' if self.peek() == Some(b'>') => two(self, Tok::Arrow),
            b'-' => Ok(Tok::Minus),
            b'=' => Ok(Tok::Eq),
            b'!' if self.peek() == Some(b'=') => two(self, Tok::Neq),
            b'!' => Ok(Tok::Not),
            b'<' if self.peek() == Some(b'=') => two(self, Tok::Le),
            b'<' => Ok(Tok::Lt),
            b'>' if self.peek() == Some(b'=') => two(self, Tok::Ge),
            b'>' => Ok(Tok::Gt),
            b'&' => Ok(Tok::Amp),
            b'|' => Ok(Tok::Pipe),
            b'+' => Ok(Tok::Plus),
            b'*' => Ok(Tok::Star),
            b'/' => Ok(Tok::Slash),
            other => Err(self.error(format!("unexpected character `{}`", other as char))),
        }
    }

    fn lex_number(&mut self) -> Result<Tok, ParseError> {
        let start = self.pos;
        while self.peek().map_or(false, |c| c.is_ascii_digit()) {
            self.bump();
        }
        // A `.` starts a fraction only if it is not the `..` range operator.
        if self.peek() == Some(b'.') && self.peek2() != Some(b'.') {
            self.bump();
            while self.peek().map_or(false, |c| c.is_ascii_digit()) {
                self.bump();
            }
        }
        if matches!(self.peek(), Some(b'e') | Some(b'E')) {
            let mark = (self.pos, self.line, self.col);
            self.bump();
            if matches!(self.peek(), Some(b'+') | Some(b'-')) {
                self.bump();
            }
            if self.peek().map_or(false, |c| c.is_ascii_digit()) {
                while self.peek().map_or(false, |c| c.is_ascii_digit()) {
                    self.bump();
                }
            } else {
                // Not an exponent after all (e.g. `2e` as ident-adjacent);
                // rewind and let the identifier lexer handle it.
                (self.pos, self.line, self.col) = mark;
            }
        }
        Ok(Tok::Num(
            String::from_utf8_lossy(&self.src[start..self.pos]).into_owned(),
        ))
    }
}

/// Parses PRISM model text into a [`PrismModel`].
pub fn parse_model(src: &str) -> Result<PrismModel, ParseError> {
    let toks = Lexer::new(src).tokenize()?;
    Parser::new(toks).parse_model()
}

/// Parses a standalone expression (used by the property layer for raw
/// comparison atoms appearing inside property formulas).
pub fn parse_expr_str(src: &str) -> Result<PExpr, ParseError> {
    let toks = Lexer::new(src).tokenize()?;
    let mut p = Parser::new(toks);
    let e = p.parse_expr()?;
    p.expect_end()?;
    Ok(e)
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
}

impl Parser {
    fn new(toks: Vec<Spanned>) -> Self {
        Parser { toks, pos: 0 }
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _, _)| t)
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|(t, _, _)| t.clone());
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn here(&self) -> (usize, usize) {
        self.toks
            .get(self.pos.min(self.toks.len().saturating_sub(1)))
            .map(|&(_, l, c)| (l, c))
            .unwrap_or((1, 1))
    }

    fn error_here(&self, message: impl Into<String>) -> ParseError {
        let (line, col) = self.here();
        ParseError {
            line,
            col,
            message: message.into(),
        }
    }

    fn unexpected(&self, wanted: &str) -> ParseError {
        match self.peek() {
            Some(t) => self.error_here(format!("expected {}, found {}", wanted, t.describe())),
            None => self.error_here(format!("expected {}, found end of input", wanted)),
        }
    }

    fn expect(&mut self, tok: Tok) -> Result<(), ParseError> {
        if self.peek() == Some(&tok) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.unexpected(&tok.describe()))
        }
    }

    fn eat(&mut self, tok: Tok) -> bool {
        if self.peek() == Some(&tok) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_ident(&mut self) -> Result<String, ParseError> {
        match self.peek() {
            Some(Tok::Ident(_)) => match self.next() {
                Some(Tok::Ident(s)) => Ok(s),
                _ => unreachable!(),
            },
            _ => Err(self.unexpected("identifier")),
        }
    }

    fn expect_keyword(&mut self, kw: &str) -> Result<(), ParseError> {
        match self.peek() {
            Some(Tok::Ident(s)) if s == kw => {
                self.pos += 1;
                Ok(())
            }
            _ => Err(self.unexpected(&format!("`{}`", kw))),
        }
    }

    fn at_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Some(Tok::Ident(s)) if s == kw)
    }

    fn expect_end(&self) -> Result<(), ParseError> {
        if self.pos == self.toks.len() {
            Ok(())
        } else {
            Err(self.unexpected("end of input"))
        }
    }

    // ---- model structure ----------------------------------------------------

    fn parse_model(&mut self) -> Result<PrismModel, ParseError> {
        let model_type = self.parse_model_type()?;
        let mut model = PrismModel::empty(model_type);
        while let Some(tok) = self.peek() {
            match tok {
                Tok::Ident(kw) => match kw.as_str() {
                    "const" => {
                        let c = self.parse_constant()?;
                        model.constants.push(c);
                    }
                    "global" => {
                        self.pos += 1;
                        let v = self.parse_var_decl()?;
                        model.globals.push(v);
                    }
                    "formula" => {
                        let f = self.parse_formula()?;
                        model.formulas.push(f);
                    }
                    "rewards" => {
                        let r = self.parse_rewards()?;
                        model.reward_structs.push(r);
                    }
                    "module" => {
                        let m = self.parse_module()?;
                        model.modules.push(m);
                    }
                    other => {
                        return Err(self.error_here(format!(
                            "expected a declaration, found `{}`",
                            other
                        )))
                    }
                },
                other => {
                    return Err(
                        self.error_here(format!("expected a declaration, found {}", other.describe()))
                    )
                }
            }
        }
        Ok(model)
    }

    fn parse_model_type(&mut self) -> Result<ModelType, ParseError> {
        let kw = self.expect_ident().map_err(|_| {
            self.error_here("expected a model type (`dtmc`, `mdp`, or `ctmc`)")
        })?;
        match kw.as_str() {
            "dtmc" | "probabilistic" => Ok(ModelType::Dtmc),
            "mdp" | "nondeterministic" => Ok(ModelType::Mdp),
            "ctmc" | "stochastic" => Ok(ModelType::Ctmc),
            "pta" | "pomdp" | "popta" => Err(self.error_here(format!(
                "model type `{}` is not supported (expected `dtmc`, `mdp`, or `ctmc`)",
                kw
            ))),
            other => Err(self.error_here(format!(
                "expected a model type (`dtmc`, `mdp`, or `ctmc`), found `{}`",
                other
            ))),
        }
    }

    fn parse_constant(&mut self) -> Result<ConstantDecl, ParseError> {
        self.expect_keyword("const")?;
        let ctype = match self.peek() {
            Some(Tok::Ident(s)) if s == "int" => {
                self.pos += 1;
                ConstType::Int
            }
            Some(Tok::Ident(s)) if s == "double" => {
                self.pos += 1;
                ConstType::Double
            }
            Some(Tok::Ident(s)) if s == "bool" => {
                self.pos += 1;
                ConstType::Bool
            }
            // Untyped constants default to int, as in PRISM.
            _ => ConstType::Int,
        };
        let name = self.expect_ident()?;
        let value = if self.eat(Tok::Eq) {
            Some(self.parse_expr()?)
        } else {
            None
        };
        self.expect(Tok::Semi)?;
        Ok(ConstantDecl { name, ctype, value })
    }

    fn parse_var_decl(&mut self) -> Result<VarDecl, ParseError> {
        let name = self.expect_ident()?;
        self.expect(Tok::Colon)?;
        let vtype = if self.at_keyword("bool") {
            self.pos += 1;
            VarType::Bool
        } else {
            self.expect(Tok::LBracket)?;
            let lo = self.parse_expr()?;
            self.expect(Tok::DotDot)?;
            let hi = self.parse_expr()?;
            self.expect(Tok::RBracket)?;
            VarType::IntRange { lo, hi }
        };
        self.expect_keyword("init")?;
        let init = self.parse_expr()?;
        self.expect(Tok::Semi)?;
        Ok(VarDecl { name, vtype, init })
    }

    fn parse_formula(&mut self) -> Result<Formula, ParseError> {
        self.expect_keyword("formula")?;
        let name = self.expect_ident()?;
        self.expect(Tok::Eq)?;
        // Split the body on `|` at parenthesis depth zero so a disjunction
        // keeps its authored disjunct list.
        let mut disjuncts = Vec::new();
        loop {
            disjuncts.push(self.parse_and()?);
            if !self.eat(Tok::Pipe) {
                break;
            }
        }
        self.expect(Tok::Semi)?;
        Ok(Formula { name, disjuncts })
    }

    fn parse_rewards(&mut self) -> Result<RewardStruct, ParseError> {
        self.expect_keyword("rewards")?;
        let name = match self.peek() {
            Some(Tok::Str(_)) => match self.next() {
                Some(Tok::Str(s)) => s,
                _ => unreachable!(),
            },
            _ => return Err(self.unexpected("quoted reward structure name")),
        };
        let mut items = Vec::new();
        while !self.at_keyword("endrewards") {
            self.expect(Tok::LBracket)?;
            let action = self.expect_ident().map_err(|_| {
                self.error_here("reward items must be action-labeled (`[action] guard : value;`)")
            })?;
            self.expect(Tok::RBracket)?;
            let guard = self.parse_guard()?;
            self.expect(Tok::Colon)?;
            let value = self.parse_expr()?;
            self.expect(Tok::Semi)?;
            items.push(RewardItem {
                action,
                guard,
                value,
            });
        }
        self.expect_keyword("endrewards")?;
        Ok(RewardStruct { name, items })
    }

    fn parse_module(&mut self) -> Result<PrismModule, ParseError> {
        self.expect_keyword("module")?;
        let name = self.expect_ident()?;
        let mut vars = Vec::new();
        let mut commands = Vec::new();
        loop {
            if self.at_keyword("endmodule") {
                self.pos += 1;
                break;
            }
            match self.peek() {
                Some(Tok::LBracket) => commands.push(self.parse_command()?),
                Some(Tok::Ident(_)) => vars.push(self.parse_var_decl()?),
                _ => return Err(self.unexpected("a variable declaration, command, or `endmodule`")),
            }
        }
        Ok(PrismModule {
            name,
            vars,
            commands,
        })
    }

    fn parse_command(&mut self) -> Result<Command, ParseError> {
        self.expect(Tok::LBracket)?;
        let action = match self.peek() {
            Some(Tok::Ident(_)) => Some(self.expect_ident()?),
            _ => None,
        };
        self.expect(Tok::RBracket)?;
        let guard = self.parse_guard()?;
        self.expect(Tok::Arrow)?;
        let mut updates = Vec::new();
        loop {
            updates.push(self.parse_update()?);
            if !self.eat(Tok::Plus) {
                break;
            }
        }
        self.expect(Tok::Semi)?;
        Ok(Command {
            action,
            guard,
            updates,
        })
    }

    /// Parses a guard as a `&`-separated conjunct list. Splitting happens at
    /// parenthesis depth zero only; `&` inside parentheses stays part of its
    /// conjunct, which is what keeps emitted guards round-trippable.
    fn parse_guard(&mut self) -> Result<Vec<PExpr>, ParseError> {
        let mut conjuncts = Vec::new();
        loop {
            conjuncts.push(self.parse_conjunct()?);
            if !self.eat(Tok::Amp) {
                break;
            }
        }
        Ok(conjuncts)
    }

    /// One conjunct: everything below `&` in the grammar, with bare `|`
    /// allowed for hand-written guards.
    fn parse_conjunct(&mut self) -> Result<PExpr, ParseError> {
        let mut e = self.parse_cmp()?;
        while self.eat(Tok::Pipe) {
            let rhs = self.parse_cmp()?;
            e = PExpr::bin(PBinOp::Or, e, rhs);
        }
        Ok(e)
    }

    // ---- expressions ----------------------------------------------------------

    /// Full expression grammar, used wherever `&`/`|` need no special
    /// treatment (constant values, weights, reward values, parentheses).
    fn parse_expr(&mut self) -> Result<PExpr, ParseError> {
        self.parse_or()
    }

    fn parse_or(&mut self) -> Result<PExpr, ParseError> {
        let mut e = self.parse_and()?;
        while self.eat(Tok::Pipe) {
            let rhs = self.parse_and()?;
            e = PExpr::bin(PBinOp::Or, e, rhs);
        }
        Ok(e)
    }

    fn parse_and(&mut self) -> Result<PExpr, ParseError> {
        let mut e = self.parse_cmp()?;
        while self.eat(Tok::Amp) {
            let rhs = self.parse_cmp()?;
            e = PExpr::bin(PBinOp::And, e, rhs);
        }
        Ok(e)
    }

    fn parse_cmp(&mut self) -> Result<PExpr, ParseError> {
        let e = self.parse_add()?;
        let op = match self.peek() {
            Some(Tok::Eq) => Some(PBinOp::Eq),
            Some(Tok::Neq) => Some(PBinOp::Ne),
            Some(Tok::Lt) => Some(PBinOp::Lt),
            Some(Tok::Le) => Some(PBinOp::Le),
            Some(Tok::Gt) => Some(PBinOp::Gt),
            Some(Tok::Ge) => Some(PBinOp::Ge),
            _ => None,
        };
        if let Some(op) = op {
            self.pos += 1;
            let rhs = self.parse_add()?;
            Ok(PExpr::bin(op, e, rhs))
        } else {
            Ok(e)
        }
    }

    fn parse_add(&mut self) -> Result<PExpr, ParseError> {
        let mut e = self.parse_mul()?;
        loop {
            if self.eat(Tok::Plus) {
                let rhs = self.parse_mul()?;
                e = PExpr::bin(PBinOp::Add, e, rhs);
            } else if self.eat(Tok::Minus) {
                let rhs = self.parse_mul()?;
                e = PExpr::bin(PBinOp::Sub, e, rhs);
            } else {
                break;
            }
        }
        Ok(e)
    }

    fn parse_mul(&mut self) -> Result<PExpr, ParseError> {
        let mut e = self.parse_unary()?;
        loop {
            if self.eat(Tok::Star) {
                let rhs = self.parse_unary()?;
                e = PExpr::bin(PBinOp::Mul, e, rhs);
            } else if self.eat(Tok::Slash) {
                let rhs = self.parse_unary()?;
                e = PExpr::bin(PBinOp::Div, e, rhs);
            } else {
                break;
            }
        }
        Ok(e)
    }

    fn parse_unary(&mut self) -> Result<PExpr, ParseError> {
        if self.eat(Tok::Minus) {
            let inner = self.parse_unary()?;
            // Fold negation into numeric literals so `-1` and `(-1)` parse
            // to the same expression.
            return Ok(match inner {
                PExpr::Int(n) => PExpr::Int(-n),
                PExpr::Real(r) => PExpr::Real(-r),
                other => PExpr::Neg(Box::new(other)),
            });
        }
        if self.eat(Tok::Not) {
            let inner = self.parse_unary()?;
            return Ok(PExpr::Not(Box::new(inner)));
        }
        self.parse_atom()
    }

    fn parse_atom(&mut self) -> Result<PExpr, ParseError> {
        match self.peek().cloned() {
            Some(Tok::LParen) => {
                self.pos += 1;
                let e = self.parse_expr()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            Some(Tok::Num(text)) => {
                self.pos += 1;
                self.literal_from_text(&text)
            }
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                match name.as_str() {
                    "true" => Ok(PExpr::Bool(true)),
                    "false" => Ok(PExpr::Bool(false)),
                    _ => Ok(PExpr::Ident(name)),
                }
            }
            _ => Err(self.unexpected("an expression")),
        }
    }

    fn literal_from_text(&self, text: &str) -> Result<PExpr, ParseError> {
        if text.contains('.') || text.contains('e') || text.contains('E') {
            rational_from_decimal_str(text)
                .map(PExpr::Real)
                .ok_or_else(|| self.error_here(format!("invalid number `{}`", text)))
        } else {
            text.parse::<BigInt>()
                .map(PExpr::Int)
                .map_err(|_| self.error_here(format!("invalid integer `{}`", text)))
        }
    }

    fn parse_update(&mut self) -> Result<Update, ParseError> {
        // An update is `[weight:] body`. The weight, when present, is the
        // expression before the first depth-zero `:`.
        let has_weight = self.scan_for_weight();
        let weight = if has_weight {
            let w = self.parse_expr()?;
            self.expect(Tok::Colon)?;
            Some(w)
        } else {
            None
        };
        // Body: `true` (no assignments) or `(v'=e)&(v'=e)...`.
        if self.at_keyword("true") {
            self.pos += 1;
            return Ok(Update {
                weight,
                assigns: Vec::new(),
            });
        }
        let mut assigns = Vec::new();
        loop {
            self.expect(Tok::LParen)?;
            let var = self.expect_ident()?;
            self.expect(Tok::Prime)?;
            self.expect(Tok::Eq)?;
            let rhs = self.parse_expr()?;
            self.expect(Tok::RParen)?;
            assigns.push((var, rhs));
            if !self.eat(Tok::Amp) {
                break;
            }
        }
        Ok(Update { weight, assigns })
    }

    /// Looks ahead from the current position for a `:` at parenthesis depth
    /// zero before the update ends (`+`, `;`), signalling a weight prefix.
    fn scan_for_weight(&self) -> bool {
        let mut depth = 0usize;
        for (tok, _, _) in &self.toks[self.pos..] {
            match tok {
                Tok::LParen | Tok::LBracket => depth += 1,
                Tok::RParen | Tok::RBracket => {
                    if depth == 0 {
                        return false;
                    }
                    depth -= 1;
                }
                Tok::Colon if depth == 0 => return true,
                Tok::Plus | Tok::Semi if depth == 0 => return false,
                _ => {}
            }
        }
        false
    }
}
