//! Core types: trees, top-down tree automata, and the Timbuk text format.

mod automaton;
mod timbuk;
mod tree;

pub use automaton::{
    Alphabet, AutomatonBuilder, AutomatonError, MembershipError, Rule, RuleId, StateId, Stats,
    SymbolId, TreeAutomaton,
};
pub use timbuk::{canonical_form, parse_timbuk, serialize_timbuk, TimbukError, TimbukErrorKind};
pub use tree::{Tree, TreeTextError};
