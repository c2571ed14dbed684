//! Reduction of nondeterministic top-down tree automata.
//!
//! The crate reduces automata while preserving their language, by removing
//! useless states, quotienting with respect to suitable equivalences, and
//! pruning transitions that are subsumed by other transitions. The relations
//! driving those steps are downward and upward simulations, their k-lookahead
//! generalizations, and combinations thereof. A catalog records which
//! relation combinations are safe for pruning and quotienting; a set of
//! independent oracles (language enumeration, determinization-based
//! equivalence, naive fixpoint simulations) backs the test suite.

pub mod bench;
pub mod bits;
pub mod lookahead;
pub mod oracle;
pub mod reduce;
pub mod relation;
pub mod simulation;
pub mod ta;

#[cfg(test)]
pub(crate) mod testutil;

pub use bench::{
    experiment, generate, stream_seed, write_csv, BenchError, ExperimentConfig, ExperimentRow,
    TdGrid, TvParams,
};
pub use reduce::{
    apply_pass, baseline, baseline_passes, build_prune_order, gfp_allowed, gfp_allowed_row,
    gfq_allowed, heavy, heavy_with, op_passes, op_xy, prune, quotient, realize, realize_base,
    reduce as reduce_automaton, reduce_with_report, run_passes, BaselineMethod, Family, GfpRow,
    Method, Pass, PassRecord, PruneOrder, ReduceError, ReductionReport, RelationSpec, SpecError,
    Verdict,
};
pub use ta::{
    parse_timbuk, serialize_timbuk, Alphabet, AutomatonError, MembershipError, Rule, RuleId,
    StateId, Stats, SymbolId, TimbukError, Tree, TreeAutomaton, TreeTextError,
};
