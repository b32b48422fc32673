//! PRISM back end for annotated activity diagrams: flow allocation, model
//! generation, the PRISM-subset syntax layer, and property resolution.
//!
//! The pipeline is:
//!
//! 1. [`alloc::preprocess`] walks the diagram and allocates every concurrent
//!    flow to a module, producing the node/edge → module mapping
//!    ([`alloc::ModMaps`]) that fixes variable and constant names.
//! 2. [`gen::transform`] turns the activity plus that mapping into a
//!    [`ast::PrismModel`] of the requested type (`dtmc`, `mdp`, `ctmc`).
//! 3. [`emit::emit_model`] serializes the model deterministically, mangling
//!    qualified names into flat PRISM identifiers; [`parse::parse_model`]
//!    reads the same subset back, so emitted text round-trips.
//! 4. [`props`] parses property lists — the PRISM property subset extended
//!    with natural-language atoms over the diagram — and resolves those
//!    atoms into plain expressions over the generated model.

pub mod alloc;
pub mod ast;
pub mod emit;
pub mod gen;
pub mod parse;
pub mod props;

pub use alloc::{preprocess, ModMaps};
pub use ast::{ModelType, PExpr, PrismModel};
pub use emit::emit_model;
pub use gen::{transform, GenError, GenOptions};
pub use parse::{parse_model, ParseError};
pub use props::{parse_property, parse_props_file, resolve_group, PropAst, ResolvedGroup};
