//! Explicit-state probabilistic model checking for the PRISM-language
//! subset produced by the activity-diagram compiler (and accepted by its
//! parser): state-space construction under synchronizing-composition
//! semantics, numeric verification of reachability, time/step-bounded,
//! transient, and reward properties on DTMC/MDP/CTMC models, and seeded
//! Monte-Carlo estimation.
//!
//! The pipeline is: build an [`build::ExplicitModel`] from a parsed model
//! plus constant bindings, then hand properties to a [`check::Checker`] (or
//! to [`sim::simulate`] for statistical estimation).

pub mod build;
pub mod check;
pub mod ctmc;
pub mod export;
pub mod graph;
pub mod linear;
pub mod mdp;
pub mod sim;

pub use build::{build, BuildError, Choice, ExplicitModel, VarInfo};
pub use check::{CheckError, CheckOutcome, Checker};
pub use export::{export_states, export_trans};
pub use linear::SolveError;
pub use sim::{simulate, SimError, SimOptions, SimResult};
