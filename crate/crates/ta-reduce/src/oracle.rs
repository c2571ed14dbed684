//! Exact reference procedures for small automata: language enumeration,
//! run enumeration, determinization-based language comparison, and
//! unoptimized simulation computations.
//!
//! Everything here trades speed for directness. These functions serve as
//! ground truth for the optimized algorithms in the rest of the crate and
//! as the engine behind the exact equivalence checker, so they are written
//! against the definitions alone and share no code with the fast paths.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashSet};

use thiserror::Error;

use crate::bits::BitSet;
use crate::relation::Relation;
use crate::ta::{MembershipError, Rule, StateId, Tree, TreeAutomaton};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("language enumeration exceeded the cap of {cap} trees")]
    EnumerationCap { cap: usize },
    #[error("automaton has {states} states, over the guard of {limit}")]
    TooManyStates { states: usize, limit: usize },
    #[error("determinization exceeded the guard of {limit} macro states")]
    TooManyMacroStates { limit: usize },
    #[error("symbol {symbol:?} is declared with conflicting ranks")]
    IncompatibleAlphabets { symbol: String },
    #[error(transparent)]
    Membership(#[from] MembershipError),
}

/// Default cap on the number of trees retained during language enumeration.
pub const DEFAULT_ENUM_CAP: usize = 10_000;
/// Default state-count guard for exact downward-language inclusion.
pub const DEFAULT_STATE_GUARD: usize = 12;
/// Default guard on reachable macro states during determinization.
pub const DEFAULT_MACRO_GUARD: usize = 1 << 16;

/// Enumerates the canonical text of every accepted tree of height at most
/// `max_height`, by computing the derivable trees of each state level by
/// level. Fails once more than `cap` trees are retained across all states.
pub fn enumerate_language(
    a: &TreeAutomaton,
    max_height: usize,
    cap: usize,
) -> Result<BTreeSet<String>, OracleError> {
    let n = a.n_states();
    let mut derivable: Vec<BTreeSet<Tree>> = vec![BTreeSet::new(); n];
    let mut last: Vec<BTreeSet<Tree>> = vec![BTreeSet::new(); n];
    let mut total = 0usize;

    // Height 1: leaf rules.
    if max_height >= 1 {
        for rule in a.rules() {
            if a.alphabet().rank(rule.symbol) == 0 {
                let t = Tree::leaf(a.alphabet().name(rule.symbol));
                if last[rule.source].insert(t) {
                    total += 1;
                    if total > cap {
                        return Err(OracleError::EnumerationCap { cap });
                    }
                }
            }
        }
    }

    for _h in 2..=max_height {
        // `derivable` holds every tree of height at most h - 2 and `last`
        // the trees of height exactly h - 1. A new tree has height exactly
        // h when at least one child comes from `last`; visiting tuples by
        // the first position that does keeps each tuple unique, so no
        // height needs recomputing.
        let mut next: Vec<BTreeSet<Tree>> = vec![BTreeSet::new(); n];
        for rule in a.rules() {
            let rank = a.alphabet().rank(rule.symbol);
            if rank == 0 {
                continue;
            }
            let name = a.alphabet().name(rule.symbol);
            for fresh_at in 0..rank {
                let domains: Vec<Vec<&Tree>> = rule
                    .targets
                    .iter()
                    .enumerate()
                    .map(|(pos, &target)| match pos.cmp(&fresh_at) {
                        Ordering::Less => derivable[target].iter().collect(),
                        Ordering::Equal => last[target].iter().collect(),
                        Ordering::Greater => derivable[target]
                            .iter()
                            .chain(last[target].iter())
                            .collect(),
                    })
                    .collect();
                let sizes: Vec<usize> = domains.iter().map(|d| d.len()).collect();
                for_each_tuple(&sizes, |idx| {
                    let children: Vec<Tree> = idx
                        .iter()
                        .enumerate()
                        .map(|(pos, &i)| domains[pos][i].clone())
                        .collect();
                    let t = Tree::node(name, children);
                    if next[rule.source].insert(t) {
                        total += 1;
                        if total > cap {
                            return Err(OracleError::EnumerationCap { cap });
                        }
                    }
                    Ok(())
                })?;
            }
        }
        for (acc, fresh) in derivable.iter_mut().zip(&last) {
            acc.extend(fresh.iter().cloned());
        }
        last = next;
    }
    for (acc, fresh) in derivable.iter_mut().zip(&last) {
        acc.extend(fresh.iter().cloned());
    }

    let mut out = BTreeSet::new();
    for &q in a.initials() {
        for t in &derivable[q] {
            out.insert(t.to_string());
        }
    }
    Ok(out)
}

/// A run assigns a state to every node of a tree; node addresses are child
/// index paths (1-based), with the root at the empty path.
pub type Run = BTreeMap<Vec<usize>, StateId>;

/// Enumerates every run of the automaton on the tree, accepting or not.
pub fn runs(a: &TreeAutomaton, t: &Tree) -> Result<Vec<Run>, MembershipError> {
    let per_root = runs_at(a, t, &[])?;
    Ok(per_root.into_iter().map(|(_, run)| run).collect())
}

/// Whether some run on the tree starts from an initial state. Agrees with
/// `TreeAutomaton::membership` by construction of the run semantics.
pub fn has_accepting_run(a: &TreeAutomaton, t: &Tree) -> Result<bool, MembershipError> {
    let per_root = runs_at(a, t, &[])?;
    Ok(per_root.iter().any(|&(q, _)| a.is_initial(q)))
}

fn runs_at(
    a: &TreeAutomaton,
    t: &Tree,
    addr: &[usize],
) -> Result<Vec<(StateId, Run)>, MembershipError> {
    let symbol = a
        .alphabet()
        .id(&t.symbol)
        .ok_or_else(|| MembershipError::UnknownSymbol(t.symbol.clone()))?;
    let rank = a.alphabet().rank(symbol);
    if rank != t.children.len() {
        return Err(MembershipError::RankMismatch {
            symbol: t.symbol.clone(),
            expected: rank,
            found: t.children.len(),
        });
    }
    let mut child_runs: Vec<Vec<(StateId, Run)>> = Vec::new();
    for (i, child) in t.children.iter().enumerate() {
        let mut child_addr = addr.to_vec();
        child_addr.push(i + 1);
        child_runs.push(runs_at(a, child, &child_addr)?);
    }
    let mut out = Vec::new();
    for rule in a.rules() {
        if rule.symbol != symbol {
            continue;
        }
        let mut partial: Vec<Run> = vec![Run::new()];
        if rank > 0 {
            for (i, options) in child_runs.iter().enumerate() {
                let mut grown = Vec::new();
                for frag in &partial {
                    for (state, run) in options {
                        if *state != rule.targets[i] {
                            continue;
                        }
                        let mut merged = frag.clone();
                        merged.extend(run.iter().map(|(k, v)| (k.clone(), *v)));
                        grown.push(merged);
                    }
                }
                partial = grown;
            }
        }
        for mut run in partial {
            run.insert(addr.to_vec(), rule.source);
            out.push((rule.source, run));
        }
    }
    Ok(out)
}

/// Exact downward-language inclusion over all states, including ψ, via the
/// reachable macro states of the determinized automaton: `(q,r)` holds iff
/// every derivable tree of `q` is derivable from `r`. Guarded by
/// [`DEFAULT_STATE_GUARD`] and [`DEFAULT_MACRO_GUARD`].
pub fn exact_dw_inclusion(a: &TreeAutomaton) -> Result<Relation, OracleError> {
    exact_dw_inclusion_with_guard(a, DEFAULT_STATE_GUARD, DEFAULT_MACRO_GUARD)
}

/// As [`exact_dw_inclusion`], with explicit guards for larger automata.
pub fn exact_dw_inclusion_with_guard(
    a: &TreeAutomaton,
    max_states: usize,
    max_macros: usize,
) -> Result<Relation, OracleError> {
    let n = a.n_states();
    if n > max_states {
        return Err(OracleError::TooManyStates {
            states: n,
            limit: max_states,
        });
    }
    let macros = reachable_macro_states(a, max_macros)?;
    let mut incl = Relation::full(n);
    for m in &macros {
        for q in m.iter() {
            incl.row_intersect(q, m);
        }
    }
    Ok(incl)
}

/// Visits every way of filling one slot per entry of `sizes`, slot `i`
/// ranging over `0..sizes[i]`, without materializing the cross product.
/// Stops early when the visitor fails.
fn for_each_tuple<E>(
    sizes: &[usize],
    mut visit: impl FnMut(&[usize]) -> Result<(), E>,
) -> Result<(), E> {
    if sizes.iter().any(|&s| s == 0) {
        return Ok(());
    }
    let mut idx = vec![0usize; sizes.len()];
    loop {
        visit(&idx)?;
        let mut pos = sizes.len();
        loop {
            if pos == 0 {
                return Ok(());
            }
            pos -= 1;
            idx[pos] += 1;
            if idx[pos] < sizes[pos] {
                break;
            }
            idx[pos] = 0;
        }
    }
}

/// The rules of `side` carrying the symbol of that name, if it exists.
fn rules_named<'a>(side: &'a TreeAutomaton, name: &str) -> Vec<&'a Rule> {
    match side.alphabet().id(name) {
        Some(symbol) => side.rules().iter().filter(|r| r.symbol == symbol).collect(),
        None => Vec::new(),
    }
}

/// All nonempty sets of states that jointly derive some tree.
fn reachable_macro_states(
    a: &TreeAutomaton,
    max_macros: usize,
) -> Result<Vec<BitSet>, OracleError> {
    let n = a.n_states();
    let mut known: Vec<BitSet> = Vec::new();
    let mut seen: HashSet<BitSet> = HashSet::new();
    let mut queue: Vec<BitSet> = Vec::new();

    let push = |m: BitSet,
                    known: &mut Vec<BitSet>,
                    seen: &mut HashSet<BitSet>,
                    queue: &mut Vec<BitSet>|
     -> Result<(), OracleError> {
        if m.is_empty() || seen.contains(&m) {
            return Ok(());
        }
        if known.len() + 1 > max_macros {
            return Err(OracleError::TooManyMacroStates { limit: max_macros });
        }
        seen.insert(m.clone());
        known.push(m.clone());
        queue.push(m);
        Ok(())
    };

    for symbol in a.alphabet().symbols() {
        if a.alphabet().rank(symbol) != 0 {
            continue;
        }
        let mut m = BitSet::new(n);
        for rule in a.rules() {
            if rule.symbol == symbol {
                m.insert(rule.source);
            }
        }
        push(m, &mut known, &mut seen, &mut queue)?;
    }

    while let Some(m) = queue.pop() {
        let upto = known.iter().position(|k| *k == m).unwrap();
        for symbol in a.alphabet().symbols() {
            let rank = a.alphabet().rank(symbol);
            if rank == 0 {
                continue;
            }
            let rules: Vec<&Rule> = a.rules().iter().filter(|r| r.symbol == symbol).collect();
            // Every tuple must mention the popped macro; visiting by the
            // first position that does keeps each tuple unique. Earlier
            // slots range over strictly older macros, later slots over
            // everything known when the pop happened.
            for fresh_at in 0..rank {
                let sizes: Vec<usize> = (0..rank)
                    .map(|pos| match pos.cmp(&fresh_at) {
                        Ordering::Less => upto,
                        Ordering::Equal => 1,
                        Ordering::Greater => upto + 1,
                    })
                    .collect();
                for_each_tuple(&sizes, |idx| {
                    let pick = |pos: usize| if pos == fresh_at { upto } else { idx[pos] };
                    let mut next = BitSet::new(n);
                    for rule in &rules {
                        if rule
                            .targets
                            .iter()
                            .enumerate()
                            .all(|(pos, &q)| known[pick(pos)].contains(q))
                        {
                            next.insert(rule.source);
                        }
                    }
                    push(next, &mut known, &mut seen, &mut queue)
                })?;
            }
        }
    }
    Ok(known)
}

/// Decides whether two automata accept the same tree language, by a joint
/// determinization explored in order of tree height. Returns `None` when
/// the languages are equal and otherwise a tree of minimal height accepted
/// by exactly one side (ties broken toward the smallest canonical text
/// built from the stored per-macro witnesses).
pub fn exact_language_equiv(
    a: &TreeAutomaton,
    b: &TreeAutomaton,
) -> Result<Option<Tree>, OracleError> {
    exact_language_equiv_with_guard(a, b, DEFAULT_MACRO_GUARD)
}

/// As [`exact_language_equiv`], with an explicit guard on the number of
/// explored joint macro states.
pub fn exact_language_equiv_with_guard(
    a: &TreeAutomaton,
    b: &TreeAutomaton,
    max_joints: usize,
) -> Result<Option<Tree>, OracleError> {
    // Shared alphabet: symbols by name, ranks must agree where both sides
    // declare a name.
    let mut names: Vec<(String, usize)> = Vec::new();
    for side in [a, b] {
        for s in side.alphabet().symbols() {
            let name = side.alphabet().name(s).to_string();
            let rank = side.alphabet().rank(s);
            match names.iter().find(|(n, _)| *n == name) {
                Some((_, r)) if *r != rank => {
                    return Err(OracleError::IncompatibleAlphabets { symbol: name })
                }
                Some(_) => {}
                None => names.push((name, rank)),
            }
        }
    }

    type Joint = (BitSet, BitSet);
    let mut known: BTreeMap<Joint, Tree> = BTreeMap::new();

    let accepts = |side: &TreeAutomaton, m: &BitSet| side.initials().iter().any(|&q| m.contains(q));
    let is_xor = |j: &Joint| accepts(a, &j.0) != accepts(b, &j.1);

    let apply = |side: &TreeAutomaton, name: &str, children: &[&BitSet]| -> BitSet {
        let mut out = BitSet::new(side.n_states());
        if let Some(symbol) = side.alphabet().id(name) {
            for rule in side.rules() {
                if rule.symbol != symbol {
                    continue;
                }
                let ok = if children.is_empty() {
                    true
                } else {
                    rule.targets
                        .iter()
                        .zip(children)
                        .all(|(&q, m)| m.contains(q))
                };
                if ok {
                    out.insert(rule.source);
                }
            }
        }
        out
    };

    // Height 1.
    let mut level: BTreeMap<Joint, Tree> = BTreeMap::new();
    for (name, rank) in &names {
        if *rank != 0 {
            continue;
        }
        let joint = (apply(a, name, &[]), apply(b, name, &[]));
        if joint.0.is_empty() && joint.1.is_empty() {
            continue;
        }
        let witness = Tree::leaf(name);
        match level.get(&joint) {
            Some(w) if w.to_string() <= witness.to_string() => {}
            _ => {
                level.insert(joint, witness);
            }
        }
    }

    loop {
        let mut fresh: Vec<Joint> = Vec::new();
        for (joint, witness) in level {
            if !known.contains_key(&joint) {
                if known.len() + 1 > max_joints {
                    return Err(OracleError::TooManyMacroStates { limit: max_joints });
                }
                known.insert(joint.clone(), witness);
                fresh.push(joint);
            }
        }
        if let Some(best) = fresh
            .iter()
            .filter(|j| is_xor(j))
            .map(|j| &known[j])
            .min_by(|x, y| x.to_string().cmp(&y.to_string()))
        {
            return Ok(Some(best.clone()));
        }
        if fresh.is_empty() {
            return Ok(None);
        }
        let frontier: Vec<Joint> = fresh;
        let frontier_set: HashSet<&Joint> = frontier.iter().collect();
        let fresh_refs: Vec<&Joint> = frontier.iter().collect();
        let all: Vec<&Joint> = known.keys().collect();
        let old: Vec<&Joint> = known.keys().filter(|j| !frontier_set.contains(j)).collect();

        level = BTreeMap::new();
        for (name, rank) in &names {
            if *rank == 0 {
                continue;
            }
            let rules_a = rules_named(a, name);
            let rules_b = rules_named(b, name);
            // Every new tuple must mention a frontier joint; visiting by
            // the first position that does keeps each tuple unique.
            // Earlier slots range over pre-frontier joints, later slots
            // over all known joints.
            for fresh_at in 0..*rank {
                let domains: Vec<&[&Joint]> = (0..*rank)
                    .map(|pos| match pos.cmp(&fresh_at) {
                        Ordering::Less => old.as_slice(),
                        Ordering::Equal => fresh_refs.as_slice(),
                        Ordering::Greater => all.as_slice(),
                    })
                    .collect();
                let sizes: Vec<usize> = domains.iter().map(|d| d.len()).collect();
                for_each_tuple(&sizes, |idx| -> Result<(), OracleError> {
                    let tuple: Vec<&Joint> = idx
                        .iter()
                        .enumerate()
                        .map(|(pos, &i)| domains[pos][i])
                        .collect();
                    let mut left = BitSet::new(a.n_states());
                    for rule in &rules_a {
                        if rule
                            .targets
                            .iter()
                            .enumerate()
                            .all(|(pos, &q)| tuple[pos].0.contains(q))
                        {
                            left.insert(rule.source);
                        }
                    }
                    let mut right = BitSet::new(b.n_states());
                    for rule in &rules_b {
                        if rule
                            .targets
                            .iter()
                            .enumerate()
                            .all(|(pos, &q)| tuple[pos].1.contains(q))
                        {
                            right.insert(rule.source);
                        }
                    }
                    let joint = (left, right);
                    if joint.0.is_empty() && joint.1.is_empty() {
                        return Ok(());
                    }
                    if known.contains_key(&joint) {
                        return Ok(());
                    }
                    let witness =
                        Tree::node(name, tuple.iter().map(|j| known[*j].clone()).collect());
                    match level.get(&joint) {
                        Some(w) if w.to_string() <= witness.to_string() => {}
                        _ => {
                            level.insert(joint, witness);
                        }
                    }
                    Ok(())
                })?;
            }
        }
    }
}

/// Downward simulation computed by plain fixpoint refinement from the full
/// relation, with no rule indexing or worklists: `q ⊑ r` survives a round
/// iff every rule of `q` is matched by a same-symbol rule of `r` whose
/// targets are related componentwise.
pub fn naive_dw_simulation(a: &TreeAutomaton) -> Relation {
    let n = a.n_states();
    let mut rel = Relation::full(n);
    loop {
        let mut next = rel.clone();
        for (q, r) in rel.pairs() {
            let ok = a.rules().iter().filter(|rule| rule.source == q).all(|rule| {
                a.rules().iter().any(|m| {
                    m.source == r
                        && m.symbol == rule.symbol
                        && rule
                            .targets
                            .iter()
                            .zip(&m.targets)
                            .all(|(&x, &y)| rel.contains(x, y))
                })
            });
            if !ok {
                next.remove(q, r);
            }
        }
        if next == rel {
            return rel;
        }
        rel = next;
    }
}

/// Upward simulation induced by `inducing` (closed transitively first),
/// computed by plain fixpoint refinement. The start relation admits `(q,r)`
/// iff `q` being ψ forces `r` to be ψ and `q` being initial forces `r` to
/// be initial; a round then asks every occurrence of `q` as a rule target
/// to be matched at the same symbol and position, with the remaining
/// targets related by the induced closure and the sources still related.
pub fn naive_up_simulation(a: &TreeAutomaton, inducing: &Relation) -> Relation {
    let n = a.n_states();
    assert_eq!(inducing.dim(), n, "inducing relation dimension mismatch");
    let side = inducing.transitive_closure();
    let mut rel = Relation::empty(n);
    for q in 0..n {
        for r in 0..n {
            let psi_ok = q != a.psi() || r == a.psi();
            let init_ok = !a.is_initial(q) || a.is_initial(r);
            if psi_ok && init_ok {
                rel.insert(q, r);
            }
        }
    }
    loop {
        let mut next = rel.clone();
        for (q, r) in rel.pairs() {
            let ok = a.rules().iter().all(|rule| {
                (0..rule.targets.len())
                    .filter(|&pos| rule.targets[pos] == q)
                    .all(|pos| {
                        a.rules().iter().any(|m| {
                            m.symbol == rule.symbol
                                && m.targets[pos] == r
                                && (0..rule.targets.len()).all(|j| {
                                    j == pos || side.contains(rule.targets[j], m.targets[j])
                                })
                                && rel.contains(rule.source, m.source)
                        })
                    })
            });
            if !ok {
                next.remove(q, r);
            }
        }
        if next == rel {
            return rel;
        }
        rel = next;
    }
}
