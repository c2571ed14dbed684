//! Top-down tree automata with a distinguished leaf-acceptance state.
//!
//! An automaton runs on trees from the root toward the leaves: a rule
//! `⟨q, σ, (q1..qn)⟩` lets state `q` read an inner node labeled `σ` and
//! sends state `qi` to the i-th child. Rules for rank-0 symbols target the
//! reserved acceptance state ψ, which has no rules of its own and appears
//! nowhere else. A tree is accepted when some initial state derives it.

use std::collections::HashMap;

use thiserror::Error;

use crate::bits::BitSet;

use super::Tree;

pub type StateId = usize;
pub type SymbolId = usize;
pub type RuleId = usize;

fn is_valid_name(name: &str) -> bool {
    !name.is_empty() && name.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'_')
}

/// Ranked alphabet; symbols are identified by their declaration order.
#[derive(Debug, Clone, Default)]
pub struct Alphabet {
    names: Vec<String>,
    ranks: Vec<usize>,
    index: HashMap<String, SymbolId>,
}

impl Alphabet {
    pub fn new() -> Alphabet {
        Alphabet::default()
    }

    pub fn add(&mut self, name: &str, rank: usize) -> Result<SymbolId, AutomatonError> {
        if !is_valid_name(name) {
            return Err(AutomatonError::InvalidName(name.to_string()));
        }
        if self.index.contains_key(name) {
            return Err(AutomatonError::DuplicateSymbol(name.to_string()));
        }
        let id = self.names.len();
        self.names.push(name.to_string());
        self.ranks.push(rank);
        self.index.insert(name.to_string(), id);
        Ok(id)
    }

    pub fn id(&self, name: &str) -> Option<SymbolId> {
        self.index.get(name).copied()
    }

    pub fn name(&self, symbol: SymbolId) -> &str {
        &self.names[symbol]
    }

    pub fn rank(&self, symbol: SymbolId) -> usize {
        self.ranks[symbol]
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    /// Symbol ids in declaration order.
    pub fn symbols(&self) -> impl Iterator<Item = SymbolId> {
        0..self.names.len()
    }
}

/// A single transition `⟨source, symbol, targets⟩`. For a rank-0 symbol the
/// target vector is exactly `[ψ]`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Rule {
    pub source: StateId,
    pub symbol: SymbolId,
    pub targets: Vec<StateId>,
}

/// Errors raised when assembling or validating an automaton.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AutomatonError {
    #[error("invalid name {0:?}: names are nonempty words over [A-Za-z0-9_]")]
    InvalidName(String),
    #[error("duplicate symbol declaration {0:?}")]
    DuplicateSymbol(String),
    #[error("duplicate state declaration {0:?}")]
    DuplicateState(String),
    #[error("undeclared state {0:?}")]
    UndeclaredState(String),
    #[error("undeclared symbol {0:?}")]
    UndeclaredSymbol(String),
    #[error("state index {0} out of range")]
    StateOutOfRange(usize),
    #[error("symbol index {0} out of range")]
    SymbolOutOfRange(usize),
    #[error("the acceptance state cannot be initial")]
    PsiInitial,
    #[error("the acceptance state cannot have outgoing rules")]
    PsiSource,
    #[error("rule for {symbol:?} has {found} targets, the symbol has rank {expected}")]
    RankMismatch {
        symbol: String,
        expected: usize,
        found: usize,
    },
    #[error("rule for rank-0 symbol {0:?} must target the acceptance state")]
    LeafTargetNotPsi(String),
    #[error("rule for {0:?} targets the acceptance state at rank above 0")]
    PsiInInnerRule(String),
}

/// Error raised when evaluating a tree whose symbols do not fit the alphabet.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MembershipError {
    #[error("symbol {0:?} is not in the alphabet")]
    UnknownSymbol(String),
    #[error("symbol {symbol:?} has rank {expected} but appears with {found} children")]
    RankMismatch {
        symbol: String,
        expected: usize,
        found: usize,
    },
}

/// Aggregate counts describing an automaton.
///
/// `states` includes the acceptance state ψ; `transitions` counts every rule
/// including leaf rules; `avg_branching` is the mean number of outgoing rules
/// per non-ψ state (0.0 when there are none).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stats {
    pub states: usize,
    pub transitions: usize,
    pub leaf_rules: usize,
    pub avg_branching: f64,
}

/// A nondeterministic top-down tree automaton.
///
/// States are dense indices; the visible states come first in declaration
/// order and ψ is always the last index. Rules are kept sorted by
/// `(source, symbol, targets)` with duplicates removed, so rule ids are
/// stable and iteration is deterministic.
#[derive(Debug, Clone)]
pub struct TreeAutomaton {
    name: String,
    alphabet: Alphabet,
    state_names: Vec<String>,
    psi_name: String,
    initials: Vec<StateId>,
    rules: Vec<Rule>,
    rule_start: Vec<usize>,
    state_index: HashMap<String, StateId>,
    comments: Vec<String>,
}

impl TreeAutomaton {
    /// Assembles an automaton from id-based parts and validates every
    /// structural invariant. `state_names` excludes ψ, whose index is
    /// `state_names.len()`.
    pub fn from_parts(
        name: &str,
        alphabet: Alphabet,
        state_names: Vec<String>,
        initials: Vec<StateId>,
        rules: Vec<Rule>,
        comments: Vec<String>,
    ) -> Result<TreeAutomaton, AutomatonError> {
        let psi = state_names.len();
        let mut state_index = HashMap::new();
        for (id, n) in state_names.iter().enumerate() {
            if !is_valid_name(n) {
                return Err(AutomatonError::InvalidName(n.clone()));
            }
            if state_index.insert(n.clone(), id).is_some() {
                return Err(AutomatonError::DuplicateState(n.clone()));
            }
        }
        let mut psi_name = "_psi".to_string();
        let mut k = 0usize;
        while state_index.contains_key(&psi_name) {
            psi_name = format!("_psi{k}");
            k += 1;
        }

        let mut initials = initials;
        initials.sort_unstable();
        initials.dedup();
        for &q in &initials {
            if q == psi {
                return Err(AutomatonError::PsiInitial);
            }
            if q > psi {
                return Err(AutomatonError::StateOutOfRange(q));
            }
        }

        let mut rules = rules;
        for r in &rules {
            if r.symbol >= alphabet.len() {
                return Err(AutomatonError::SymbolOutOfRange(r.symbol));
            }
            let sym = alphabet.name(r.symbol).to_string();
            if r.source == psi {
                return Err(AutomatonError::PsiSource);
            }
            if r.source > psi {
                return Err(AutomatonError::StateOutOfRange(r.source));
            }
            let rank = alphabet.rank(r.symbol);
            if rank == 0 {
                if r.targets.len() != 1 {
                    return Err(AutomatonError::RankMismatch {
                        symbol: sym,
                        expected: 0,
                        found: r.targets.len(),
                    });
                }
                if r.targets[0] != psi {
                    return Err(AutomatonError::LeafTargetNotPsi(sym));
                }
            } else {
                if r.targets.len() != rank {
                    return Err(AutomatonError::RankMismatch {
                        symbol: sym,
                        expected: rank,
                        found: r.targets.len(),
                    });
                }
                for &t in &r.targets {
                    if t == psi {
                        return Err(AutomatonError::PsiInInnerRule(sym));
                    }
                    if t > psi {
                        return Err(AutomatonError::StateOutOfRange(t));
                    }
                }
            }
        }
        rules.sort_unstable();
        rules.dedup();

        let mut rule_start = vec![0usize; psi + 2];
        for r in &rules {
            rule_start[r.source + 1] += 1;
        }
        for i in 1..rule_start.len() {
            rule_start[i] += rule_start[i - 1];
        }

        Ok(TreeAutomaton {
            name: name.to_string(),
            alphabet,
            state_names,
            psi_name,
            initials,
            rules,
            rule_start,
            state_index,
            comments,
        })
    }

    pub fn builder(name: &str) -> AutomatonBuilder {
        AutomatonBuilder::new(name)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn set_name(&mut self, name: &str) {
        self.name = name.to_string();
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    /// Total number of states including ψ.
    pub fn n_states(&self) -> usize {
        self.state_names.len() + 1
    }

    pub fn psi(&self) -> StateId {
        self.state_names.len()
    }

    pub fn is_psi(&self, q: StateId) -> bool {
        q == self.psi()
    }

    pub fn state_name(&self, q: StateId) -> &str {
        if q == self.psi() {
            &self.psi_name
        } else {
            &self.state_names[q]
        }
    }

    pub fn state_id(&self, name: &str) -> Option<StateId> {
        self.state_index.get(name).copied()
    }

    /// All states including ψ, in index order.
    pub fn states(&self) -> impl Iterator<Item = StateId> {
        0..self.n_states()
    }

    /// States other than ψ, in declaration order.
    pub fn visible_states(&self) -> impl Iterator<Item = StateId> {
        0..self.psi()
    }

    pub fn initials(&self) -> &[StateId] {
        &self.initials
    }

    pub fn is_initial(&self, q: StateId) -> bool {
        self.initials.binary_search(&q).is_ok()
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn rule(&self, id: RuleId) -> &Rule {
        &self.rules[id]
    }

    /// Rules with source `q` as a contiguous slice.
    pub fn rules_from(&self, q: StateId) -> &[Rule] {
        &self.rules[self.rule_start[q]..self.rule_start[q + 1]]
    }

    /// Rule ids of the rules with source `q`.
    pub fn rule_ids_from(&self, q: StateId) -> std::ops::Range<RuleId> {
        self.rule_start[q]..self.rule_start[q + 1]
    }

    pub fn comments(&self) -> &[String] {
        &self.comments
    }

    pub fn add_comment(&mut self, text: &str) {
        self.comments.push(text.to_string());
    }

    pub fn stats(&self) -> Stats {
        let transitions = self.rules.len();
        let leaf_rules = self
            .rules
            .iter()
            .filter(|r| self.alphabet.rank(r.symbol) == 0)
            .count();
        let visible = self.state_names.len();
        Stats {
            states: visible + 1,
            transitions,
            leaf_rules,
            avg_branching: if visible == 0 {
                0.0
            } else {
                transitions as f64 / visible as f64
            },
        }
    }

    /// The set of states that derive `t`, computed bottom-up.
    pub fn derivers(&self, t: &Tree) -> Result<BitSet, MembershipError> {
        let symbol = self
            .alphabet
            .id(&t.symbol)
            .ok_or_else(|| MembershipError::UnknownSymbol(t.symbol.clone()))?;
        let rank = self.alphabet.rank(symbol);
        if rank != t.children.len() {
            return Err(MembershipError::RankMismatch {
                symbol: t.symbol.clone(),
                expected: rank,
                found: t.children.len(),
            });
        }
        let child_sets: Vec<BitSet> = t
            .children
            .iter()
            .map(|c| self.derivers(c))
            .collect::<Result<_, _>>()?;
        let mut out = BitSet::new(self.n_states());
        for r in &self.rules {
            if r.symbol != symbol || out.contains(r.source) {
                continue;
            }
            let ok = if rank == 0 {
                true
            } else {
                r.targets
                    .iter()
                    .zip(&child_sets)
                    .all(|(&q, set)| set.contains(q))
            };
            if ok {
                out.insert(r.source);
            }
        }
        Ok(out)
    }

    /// Whether the automaton accepts `t`: some initial state derives it.
    pub fn membership(&self, t: &Tree) -> Result<bool, MembershipError> {
        let derivers = self.derivers(t)?;
        Ok(self.initials.iter().any(|&q| derivers.contains(q)))
    }

    /// Removes states that are not both productive and reachable from an
    /// initial state through productive rules, along with their rules.
    /// ψ is always kept. The result may have no visible states at all, in
    /// which case it accepts the empty language.
    pub fn remove_useless(&self) -> TreeAutomaton {
        let n = self.n_states();
        let psi = self.psi();

        let mut productive = BitSet::new(n);
        productive.insert(psi);
        let mut changed = true;
        while changed {
            changed = false;
            for r in &self.rules {
                if !productive.contains(r.source)
                    && r.targets.iter().all(|&t| productive.contains(t))
                {
                    productive.insert(r.source);
                    changed = true;
                }
            }
        }

        let mut reached = BitSet::new(n);
        let mut stack: Vec<StateId> = Vec::new();
        for &q in &self.initials {
            if productive.contains(q) && !reached.contains(q) {
                reached.insert(q);
                stack.push(q);
            }
        }
        while let Some(q) = stack.pop() {
            for r in self.rules_from(q) {
                if r.targets.iter().all(|&t| productive.contains(t)) {
                    for &t in &r.targets {
                        if t != psi && !reached.contains(t) {
                            reached.insert(t);
                            stack.push(t);
                        }
                    }
                }
            }
        }

        let mut old_to_new: Vec<Option<StateId>> = vec![None; n];
        let mut new_names = Vec::new();
        for q in self.visible_states() {
            if productive.contains(q) && reached.contains(q) {
                old_to_new[q] = Some(new_names.len());
                new_names.push(self.state_names[q].clone());
            }
        }
        let new_psi = new_names.len();
        old_to_new[psi] = Some(new_psi);

        let new_initials: Vec<StateId> = self
            .initials
            .iter()
            .filter_map(|&q| old_to_new[q])
            .collect();
        let new_rules: Vec<Rule> = self
            .rules
            .iter()
            .filter(|r| {
                old_to_new[r.source].is_some() && r.targets.iter().all(|&t| old_to_new[t].is_some())
            })
            .map(|r| Rule {
                source: old_to_new[r.source].unwrap(),
                symbol: r.symbol,
                targets: r.targets.iter().map(|&t| old_to_new[t].unwrap()).collect(),
            })
            .collect();

        TreeAutomaton::from_parts(
            &self.name,
            self.alphabet.clone(),
            new_names,
            new_initials,
            new_rules,
            self.comments.clone(),
        )
        .expect("removing useless states preserves validity")
    }
}

/// Name-based construction convenience for tests, fixtures, and parsing.
///
/// Leaf rules are added with an empty target list; `finish` routes them to ψ.
#[derive(Debug, Clone)]
pub struct AutomatonBuilder {
    name: String,
    symbols: Vec<(String, usize)>,
    states: Vec<String>,
    initials: Vec<String>,
    rules: Vec<(String, String, Vec<String>)>,
}

impl AutomatonBuilder {
    pub fn new(name: &str) -> AutomatonBuilder {
        AutomatonBuilder {
            name: name.to_string(),
            symbols: Vec::new(),
            states: Vec::new(),
            initials: Vec::new(),
            rules: Vec::new(),
        }
    }

    pub fn symbol(mut self, name: &str, rank: usize) -> Self {
        self.symbols.push((name.to_string(), rank));
        self
    }

    pub fn state(mut self, name: &str) -> Self {
        self.states.push(name.to_string());
        self
    }

    pub fn states(mut self, names: &[&str]) -> Self {
        self.states.extend(names.iter().map(|s| s.to_string()));
        self
    }

    pub fn initial(mut self, name: &str) -> Self {
        self.initials.push(name.to_string());
        self
    }

    pub fn initials(mut self, names: &[&str]) -> Self {
        self.initials.extend(names.iter().map(|s| s.to_string()));
        self
    }

    pub fn rule(mut self, source: &str, symbol: &str, targets: &[&str]) -> Self {
        self.rules.push((
            source.to_string(),
            symbol.to_string(),
            targets.iter().map(|s| s.to_string()).collect(),
        ));
        self
    }

    pub fn finish(self) -> Result<TreeAutomaton, AutomatonError> {
        let mut alphabet = Alphabet::new();
        for (name, rank) in &self.symbols {
            alphabet.add(name, *rank)?;
        }
        let mut state_ids: HashMap<&str, StateId> = HashMap::new();
        for (i, s) in self.states.iter().enumerate() {
            if state_ids.insert(s.as_str(), i).is_some() {
                return Err(AutomatonError::DuplicateState(s.clone()));
            }
        }
        let psi = self.states.len();
        let lookup_state = |name: &str| -> Result<StateId, AutomatonError> {
            state_ids
                .get(name)
                .copied()
                .ok_or_else(|| AutomatonError::UndeclaredState(name.to_string()))
        };
        let initials = self
            .initials
            .iter()
            .map(|s| lookup_state(s))
            .collect::<Result<Vec<_>, _>>()?;
        let mut rules = Vec::new();
        for (source, symbol, targets) in &self.rules {
            let symbol_id = alphabet
                .id(symbol)
                .ok_or_else(|| AutomatonError::UndeclaredSymbol(symbol.clone()))?;
            let source = lookup_state(source)?;
            let targets = if alphabet.rank(symbol_id) == 0 && targets.is_empty() {
                vec![psi]
            } else {
                targets
                    .iter()
                    .map(|t| lookup_state(t))
                    .collect::<Result<Vec<_>, _>>()?
            };
            rules.push(Rule {
                source,
                symbol: symbol_id,
                targets,
            });
        }
        TreeAutomaton::from_parts(&self.name, alphabet, self.states, initials, rules, Vec::new())
    }
}
