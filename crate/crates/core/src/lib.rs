//! Term rewriting with set automata.
//!
//! A set automaton finds every redex of a term in a single top-down pass.
//! This crate builds such automata from a term rewrite system, runs them over
//! maximally shared terms, and uses them to drive normalization while reusing
//! matching work across rewrite steps.

pub mod automaton;
pub mod engine;
pub mod fuzz;
pub mod matcher;
pub mod position;
pub mod rewriter;
pub mod syntax;
pub mod term;
pub mod trs;

pub use automaton::{construct, ConstructionOptions, DependencyKind, SetAutomaton, StateId};
pub use position::Position;
pub use syntax::{parse_term, ParseError};
pub use term::{FnId, Head, Signature, TermError, TermId, TermPool, VarId};
pub use trs::{parse_trs, RuleId, Trs};
