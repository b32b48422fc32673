//! Annotation expressions: exact rational arithmetic over activity
//! parameters.
//!
//! Expressions are evaluated in arbitrary-precision rational arithmetic;
//! conversion to floating point happens only at the model-checking engine
//! boundary. This keeps checks like "probabilities sum to 1" exact when the
//! involved values are rational literals.

use std::collections::BTreeMap;
use std::collections::BTreeSet;
use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

pub use num_rational::BigRational;

/// Comparison operators usable in guard expressions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CmpOp {
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
            CmpOp::Eq => "=",
            CmpOp::Ne => "!=",
        }
    }
}

/// An annotation expression over activity parameters.
///
/// `Real` and `Int` are kept distinct so the canonical printer can reproduce
/// the literal form that was parsed (`1.0` vs `1`); both evaluate to exact
/// rationals.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Expr {
    Real(BigRational),
    Int(BigInt),
    Bool(bool),
    Param(String),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Not(Box<Expr>),
    And(Box<Expr>, Box<Expr>),
    Or(Box<Expr>, Box<Expr>),
    Cmp(CmpOp, Box<Expr>, Box<Expr>),
}

/// Result of evaluating an expression.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Value {
    Num(BigRational),
    Bool(bool),
}

impl Value {
    pub fn as_num(&self) -> Result<&BigRational, EvalError> {
        match self {
            Value::Num(r) => Ok(r),
            Value::Bool(_) => Err(EvalError::TypeMismatch("expected a number, got a boolean")),
        }
    }

    pub fn as_bool(&self) -> Result<bool, EvalError> {
        match self {
            Value::Bool(b) => Ok(*b),
            Value::Num(_) => Err(EvalError::TypeMismatch("expected a boolean, got a number")),
        }
    }

    pub fn to_f64(&self) -> Option<f64> {
        match self {
            Value::Num(r) => r.to_f64(),
            Value::Bool(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("unbound parameter `{0}`")]
    UnboundParam(String),
    #[error("division by zero")]
    DivisionByZero,
    #[error("type mismatch: {0}")]
    TypeMismatch(&'static str),
}

impl Expr {
    pub fn real_from_int(n: i64) -> Expr {
        Expr::Real(BigRational::from_integer(BigInt::from(n)))
    }

    pub fn int(n: i64) -> Expr {
        Expr::Int(BigInt::from(n))
    }

    pub fn param(name: &str) -> Expr {
        Expr::Param(name.to_string())
    }

    /// Evaluates with exact rational arithmetic. Every referenced parameter
    /// must be bound in `env`.
    pub fn eval(&self, env: &BTreeMap<String, Value>) -> Result<Value, EvalError> {
        match self {
            Expr::Real(r) => Ok(Value::Num(r.clone())),
            Expr::Int(n) => Ok(Value::Num(BigRational::from_integer(n.clone()))),
            Expr::Bool(b) => Ok(Value::Bool(*b)),
            Expr::Param(name) => env
                .get(name)
                .cloned()
                .ok_or_else(|| EvalError::UnboundParam(name.clone())),
            Expr::Neg(e) => Ok(Value::Num(-e.eval(env)?.as_num()?.clone())),
            Expr::Add(a, b) => Ok(Value::Num(
                a.eval(env)?.as_num()? + b.eval(env)?.as_num()?,
            )),
            Expr::Sub(a, b) => Ok(Value::Num(
                a.eval(env)?.as_num()? - b.eval(env)?.as_num()?,
            )),
            Expr::Mul(a, b) => Ok(Value::Num(
                a.eval(env)?.as_num()? * b.eval(env)?.as_num()?,
            )),
            Expr::Div(a, b) => {
                let denom = b.eval(env)?.as_num()?.clone();
                if denom.is_zero() {
                    return Err(EvalError::DivisionByZero);
                }
                Ok(Value::Num(a.eval(env)?.as_num()? / denom))
            }
            Expr::Not(e) => Ok(Value::Bool(!e.eval(env)?.as_bool()?)),
            Expr::And(a, b) => Ok(Value::Bool(
                a.eval(env)?.as_bool()? && b.eval(env)?.as_bool()?,
            )),
            Expr::Or(a, b) => Ok(Value::Bool(
                a.eval(env)?.as_bool()? || b.eval(env)?.as_bool()?,
            )),
            Expr::Cmp(op, a, b) => {
                let l = a.eval(env)?.as_num()?.clone();
                let r = b.eval(env)?.as_num()?.clone();
                Ok(Value::Bool(match op {
                    CmpOp::Lt => l < r,
                    CmpOp::Le => l <= r,
                    CmpOp::Gt => l > r,
                    CmpOp::Ge => l >= r,
                    CmpOp::Eq => l == r,
                    CmpOp::Ne => l != r,
                }))
            }
        }
    }

    /// Names of all parameters referenced anywhere in the expression.
    pub fn free_params(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_params(&mut out);
        out
    }

    fn collect_params(&self, out: &mut BTreeSet<String>) {
        match self {
            Expr::Real(_) | Expr::Int(_) | Expr::Bool(_) => {}
            Expr::Param(name) => {
                out.insert(name.clone());
            }
            Expr::Neg(e) | Expr::Not(e) => e.collect_params(out),
            Expr::Add(a, b)
            | Expr::Sub(a, b)
            | Expr::Mul(a, b)
            | Expr::Div(a, b)
            | Expr::And(a, b)
            | Expr::Or(a, b)
            | Expr::Cmp(_, a, b) => {
                a.collect_params(out);
                b.collect_params(out);
            }
        }
    }

    /// Operator precedence used by the printer (higher binds tighter).
    fn precedence(&self) -> u8 {
        match self {
            Expr::Or(..) => 1,
            Expr::And(..) => 2,
            Expr::Not(..) => 3,
            Expr::Cmp(..) => 4,
            Expr::Add(..) | Expr::Sub(..) => 5,
            Expr::Mul(..) | Expr::Div(..) => 6,
            Expr::Neg(..) => 7,
            _ => 8,
        }
    }

    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, min_prec: u8) -> fmt::Result {
        let prec = self.precedence();
        let parens = prec < min_prec;
        if parens {
            write!(f, "(")?;
        }
        match self {
            Expr::Real(r) => write!(f, "{}", fmt_real(r))?,
            Expr::Int(n) => write!(f, "{n}")?,
            Expr::Bool(b) => write!(f, "{b}")?,
            Expr::Param(name) => write!(f, "{name}")?,
            Expr::Neg(e) => {
                write!(f, "-")?;
                e.fmt_prec(f, prec + 1)?;
            }
            Expr::Not(e) => {
                write!(f, "!")?;
                e.fmt_prec(f, prec + 1)?;
            }
            Expr::Add(a, b) => {
                a.fmt_prec(f, prec)?;
                write!(f, " + ")?;
                b.fmt_prec(f, prec + 1)?;
            }
            Expr::Sub(a, b) => {
                a.fmt_prec(f, prec)?;
                write!(f, " - ")?;
                b.fmt_prec(f, prec + 1)?;
            }
            Expr::Mul(a, b) => {
                a.fmt_prec(f, prec)?;
                write!(f, " * ")?;
                b.fmt_prec(f, prec + 1)?;
            }
            Expr::Div(a, b) => {
                a.fmt_prec(f, prec)?;
                write!(f, " / ")?;
                b.fmt_prec(f, prec + 1)?;
            }
            Expr::And(a, b) => {
                a.fmt_prec(f, prec)?;
                write!(f, " & ")?;
                b.fmt_prec(f, prec + 1)?;
            }
            Expr::Or(a, b) => {
                a.fmt_prec(f, prec)?;
                write!(f, " | ")?;
                b.fmt_prec(f, prec + 1)?;
            }
            Expr::Cmp(op, a, b) => {
                a.fmt_prec(f, prec + 1)?;
                write!(f, " {} ", op.symbol())?;
                b.fmt_prec(f, prec + 1)?;
            }
        }
        if parens {
            write!(f, ")")?;
        }
        Ok(())
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, 0)
    }
}

/// Formats a rational as a *real* literal: a finite decimal (always with a
/// decimal point so it re-parses as a real) when one exists, preferring at
/// most 12 fractional digits, otherwise a `(p/q)` quotient.
pub fn fmt_real(r: &BigRational) -> String {
    match decimal_digits(r, 12).or_else(|| decimal_digits(r, u32::MAX)) {
        Some(s) => s,
        None => format!("({}/{})", r.numer(), r.denom()),
    }
}

/// Formats a rational as a decimal literal with at most `max_frac` fractional
/// digits if that representation is exact; `None` otherwise. Integral values
/// are rendered with a trailing `.0`.
pub fn decimal_digits(r: &BigRational, max_frac: u32) -> Option<String> {
    let sign = if r.is_negative() { "-" } else { "" };
    let num = r.numer().abs();
    let den = r.denom().clone();
    if den.is_one() {
        return Some(format!("{sign}{num}.0"));
    }
    // The decimal expansion terminates iff den = 2^a * 5^b; the number of
    // fractional digits needed is max(a, b).
    let mut d = den.clone();
    let two = BigInt::from(2);
    let five = BigInt::from(5);
    let mut a = 0u32;
    let mut b = 0u32;
    while (&d % &two).is_zero() {
        d /= &two;
        a += 1;
    }
    while (&d % &five).is_zero() {
        d /= &five;
        b += 1;
    }
    if !d.is_one() {
        return None;
    }
    let digits = a.max(b);
    if digits > max_frac {
        return None;
    }
    let scaled = num * BigInt::from(10).pow(digits) / den;
    let s = scaled.to_string();
    let (int_part, frac_part) = if s.len() > digits as usize {
        let split = s.len() - digits as usize;
        (s[..split].to_string(), s[split..].to_string())
    } else {
        ("0".to_string(), format!("{:0>width$}", s, width = digits as usize))
    };
    Some(format!("{sign}{int_part}.{frac_part}"))
}

/// Parses a decimal/scientific literal (e.g. `0.25`, `3`, `1e-8`) into an
/// exact rational. Returns `None` on malformed input.
pub fn rational_from_decimal_str(s: &str) -> Option<BigRational> {
    let (mantissa, exp) = match s.find(['e', 'E']) {
        Some(i) => {
            let e: i64 = s[i + 1..].parse().ok()?;
            (&s[..i], e)
        }
        None => (s, 0),
    };
    let (int_part, frac_part) = match mantissa.find('.') {
        Some(i) => (&mantissa[..i], &mantissa[i + 1..]),
        None => (mantissa, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    let digits: String = format!("{int_part}{frac_part}");
    if !digits.chars().all(|c| c.is_ascii_digit()) {
        return None;
    }
    let num: BigInt = digits.parse().ok()?;
    let shift = exp - frac_part.len() as i64;
    let ten = BigInt::from(10);
    Some(if shift >= 0 {
        BigRational::from_integer(num * ten.pow(shift as u32))
    } else {
        BigRational::new(num, ten.pow((-shift) as u32))
    })
}
