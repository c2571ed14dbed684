//! Shared fixture loading for unit tests.

use crate::ta::{parse_timbuk, StateId, TreeAutomaton};

pub(crate) fn fixture(name: &str) -> TreeAutomaton {
    let text = match name {
        "basic" => include_str!("../tests/data/basic.tmb"),
        "merge_gain" => include_str!("../tests/data/merge_gain.tmb"),
        "leaf_choice" => include_str!("../tests/data/leaf_choice.tmb"),
        "chain_choice" => include_str!("../tests/data/chain_choice.tmb"),
        "nonstrict_pair" => include_str!("../tests/data/nonstrict_pair.tmb"),
        "branch_choice" => include_str!("../tests/data/branch_choice.tmb"),
        "layered" => include_str!("../tests/data/layered.tmb"),
        "lookahead_gap" => include_str!("../tests/data/lookahead_gap.tmb"),
        "single_prune" => include_str!("../tests/data/single_prune.tmb"),
        other => panic!("unknown fixture {other}"),
    };
    parse_timbuk(text).expect("fixture parses")
}

pub(crate) fn id_of(a: &TreeAutomaton, name: &str) -> StateId {
    a.state_id(name).expect("state exists")
}
