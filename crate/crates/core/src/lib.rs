//! Domain model for probability/reliability/time/reward-annotated activity
//! diagrams, together with the `.adl` textual format (parser + canonical
//! printer) and the static well-formedness validator.
//!
//! Everything in this crate is a pure, immutable value: parsing produces an
//! [`ActivityFile`], the accessors on [`Activity`] never mutate, and
//! [`validate`] returns violations as data. Downstream crates build PRISM
//! modules, explicit-state Markov models, and parametric rational functions
//! on top of these types.

pub mod activity;
pub mod expr;
pub mod text;
pub mod validate;

pub use activity::{
    Activity, ActivityFile, Edge, Guard, ModelType, Node, NodeKind, Parameter, ParamType,
    PropertyGroup,
};
pub use expr::{fmt_real, rational_from_decimal_str, BigRational, CmpOp, EvalError, Expr, Value};
pub use text::{parse_activity_file, render_activity_file, ParseError, SourceSpan};
pub use validate::{validate, Violation, ViolationCode};
