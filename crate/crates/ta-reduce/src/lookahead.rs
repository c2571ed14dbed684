//! k-lookahead simulations computed by Spoiler/Duplicator game search.
//!
//! Downward: Spoiler announces a run on a k-bounded tree (leaves at depth k
//! or dead ends), Duplicator answers on a nonempty prefix and must leave
//! related states at every point where she stops. Upward: Spoiler climbs a
//! path of up to k rule occurrences, Duplicator climbs in parallel matching
//! symbols and positions, with side branches compared by the inducing
//! relation. Neither relation is transitive in general, so the `_closed`
//! variants take the transitive closure before the relation is used to
//! prune or quotient.

use std::collections::{BTreeSet, HashMap};

use crate::bits::BitSet;
use crate::relation::Relation;
use crate::ta::{Rule, StateId, SymbolId, TreeAutomaton};

/// Hard ceiling on the lookahead depth accepted without an explicit override.
pub const DEFAULT_MAX_K: u32 = 16;

/// Spoiler move enumeration order. Verdicts are existential over moves, so
/// the order must never change the computed relation; tests flip it to
/// check that.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum MoveOrder {
    Forward,
    #[cfg_attr(not(test), allow(dead_code))]
    Reverse,
}

/// Tuning knobs for the lookahead game search.
#[derive(Debug, Clone, Copy)]
pub struct GameConfig {
    /// Requested lookahead depth (at least 1).
    pub k: u32,
    /// Depth ceiling; `k` is clamped to this value.
    pub max_k: u32,
    pub(crate) move_order: MoveOrder,
}

impl GameConfig {
    /// A configuration with the default depth ceiling.
    pub fn new(k: u32) -> GameConfig {
        assert!(k >= 1, "lookahead depth must be at least 1");
        GameConfig {
            k,
            max_k: DEFAULT_MAX_K,
            move_order: MoveOrder::Forward,
        }
    }

    fn depth(&self) -> u32 {
        self.k.min(self.max_k)
    }
}

/// The k-lookahead downward simulation. Reflexive, not transitive in
/// general; close it with [`lookahead_dw_closed`] before using it to reduce.
pub fn lookahead_dw(a: &TreeAutomaton, k: u32) -> Relation {
    lookahead_dw_with(a, GameConfig::new(k))
}

/// Transitive closure of [`lookahead_dw`]; a sound under-approximation of
/// downward trace inclusion.
pub fn lookahead_dw_closed(a: &TreeAutomaton, k: u32) -> Relation {
    lookahead_dw(a, k).transitive_closure()
}

/// The k-lookahead upward simulation induced by `inducing` (closed
/// transitively before use). Not transitive in general.
///
/// # Panics
/// Panics if the dimension of `inducing` differs from the state count.
pub fn lookahead_up(a: &TreeAutomaton, k: u32, inducing: &Relation) -> Relation {
    lookahead_up_with(a, GameConfig::new(k), inducing)
}

/// Transitive closure of [`lookahead_up`].
pub fn lookahead_up_closed(a: &TreeAutomaton, k: u32, inducing: &Relation) -> Relation {
    lookahead_up(a, k, inducing).transitive_closure()
}

pub(crate) fn lookahead_dw_with(a: &TreeAutomaton, cfg: GameConfig) -> Relation {
    let n = a.n_states();
    let depth = cfg.depth();
    let mut rel = Relation::full(n);
    loop {
        let snapshot = rel.clone();
        let mut game = DwGame {
            a,
            snapshot: &snapshot,
            order: cfg.move_order,
            memo: HashMap::new(),
        };
        let mut changed = false;
        for q in 0..n {
            for r in 0..n {
                // The diagonal survives every round: Duplicator mirrors
                // Spoiler's run move for move.
                if q == r || !snapshot.contains(q, r) {
                    continue;
                }
                let mut single = BitSet::new(n);
                single.insert(r);
                if game.spoiler_kills(q, &single, depth) {
                    rel.remove(q, r);
                    changed = true;
                }
            }
        }
        if !changed {
            return rel;
        }
    }
}

pub(crate) fn lookahead_up_with(
    a: &TreeAutomaton,
    cfg: GameConfig,
    inducing: &Relation,
) -> Relation {
    let n = a.n_states();
    assert_eq!(inducing.dim(), n, "inducing relation dimension mismatch");
    let depth = cfg.depth();
    let side = inducing.transitive_closure();

    let rules = a.rules();
    let mut occurrences: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    let mut by_slot: HashMap<(SymbolId, usize, StateId), Vec<usize>> = HashMap::new();
    for (idx, rule) in rules.iter().enumerate() {
        for (pos, &t) in rule.targets.iter().enumerate() {
            occurrences[t].push((idx, pos));
            by_slot.entry((rule.symbol, pos, t)).or_default().push(idx);
        }
    }

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
        let snapshot = rel.clone();
        let mut game = UpGame {
            a,
            rules,
            occurrences: &occurrences,
            by_slot: &by_slot,
            snapshot: &snapshot,
            side: &side,
            order: cfg.move_order,
            memo: HashMap::new(),
        };
        let mut changed = false;
        for q in 0..n {
            for r in 0..n {
                if !snapshot.contains(q, r) {
                    continue;
                }
                let mut single = BitSet::new(n);
                single.insert(r);
                if game.spoiler_wins(q, &single, depth, true) {
                    rel.remove(q, r);
                    changed = true;
                }
            }
        }
        if !changed {
            return rel;
        }
    }
}

/// One round of the downward game against a fixed snapshot relation.
///
/// A position is Spoiler's state `p` at the current node, the set of
/// Duplicator candidate states at the same node, and the remaining depth.
/// `spoiler_kills` decides whether Spoiler can announce a subtree that
/// defeats every candidate.
struct DwGame<'a> {
    a: &'a TreeAutomaton,
    snapshot: &'a Relation,
    order: MoveOrder,
    memo: HashMap<(StateId, BitSet, u32), bool>,
}

impl<'a> DwGame<'a> {
    fn spoiler_kills(&mut self, p: StateId, pebbles: &BitSet, j: u32) -> bool {
        debug_assert!(j >= 1);
        let a = self.a;
        let rules = a.rules_from(p);
        if rules.is_empty() {
            // Spoiler cannot announce anything from a dead end.
            return false;
        }
        let key = (p, pebbles.clone(), j);
        if let Some(&hit) = self.memo.get(&key) {
            return hit;
        }
        let verdict = match self.order {
            MoveOrder::Forward => rules
                .iter()
                .any(|rule| self.rule_kills(rule, pebbles, j)),
            MoveOrder::Reverse => rules
                .iter()
                .rev()
                .any(|rule| self.rule_kills(rule, pebbles, j)),
        };
        self.memo.insert(key, verdict);
        verdict
    }

    /// Does announcing `rule` at the current node defeat every candidate?
    fn rule_kills(&mut self, rule: &Rule, pebbles: &BitSet, j: u32) -> bool {
        let a = self.a;
        let arity = a.alphabet().rank(rule.symbol);

        // Duplicator's same-symbol moves from any candidate, deduplicated:
        // only the states reached matter, not which candidate moved.
        let mut moves: BTreeSet<&[StateId]> = BTreeSet::new();
        for d in pebbles.iter() {
            for m in a.rules_from(d) {
                if m.symbol == rule.symbol {
                    moves.insert(&m.targets);
                }
            }
        }
        if moves.is_empty() {
            // No candidate can cover this node at all.
            return true;
        }
        if arity == 0 {
            // Some candidate matches the leaf symbol and the branch closes.
            return false;
        }

        let kids = &rule.targets;
        // Channels of a move: child positions where that candidate cannot
        // simply stop with a related pair. Spoiler must defeat each
        // surviving move through one of its channels.
        let mut contested: Vec<(&[StateId], Vec<usize>)> = Vec::new();
        'moves: for mv in moves {
            let mut channels = Vec::new();
            for i in 0..arity {
                if !self.snapshot.contains(kids[i], mv[i]) {
                    channels.push(i);
                }
            }
            if channels.is_empty() {
                // This candidate stops below every child; the rule cannot win.
                return false;
            }
            for &i in &channels {
                if j == 1 || a.rules_from(kids[i]).is_empty() {
                    // The game below child i ends immediately (depth
                    // exhausted or Spoiler's child state is a dead end), so
                    // an unrelated candidate dies there for free.
                    continue 'moves;
                }
            }
            contested.push((mv, channels));
        }
        if contested.is_empty() {
            return true;
        }

        // Keep only channels where Spoiler can already defeat the candidate
        // alone; defeating a larger set through the same child is harder.
        let n = a.n_states();
        let mut constrained: Vec<(&[StateId], Vec<usize>)> = Vec::with_capacity(contested.len());
        for (mv, channels) in contested {
            let mut feasible = Vec::new();
            for &i in &channels {
                let mut single = BitSet::new(n);
                single.insert(mv[i]);
                if self.spoiler_kills(kids[i], &single, j - 1) {
                    feasible.push(i);
                }
            }
            if feasible.is_empty() {
                return false;
            }
            constrained.push((mv, feasible));
        }

        // Assign each move to one of its feasible channels so that every
        // child game is still won jointly. Most constrained moves first.
        constrained.sort_by(|x, y| (x.1.len(), x.0).cmp(&(y.1.len(), y.0)));
        let mut sets = vec![BitSet::new(n); arity];
        self.assign(&constrained, 0, &mut sets, kids, j)
    }

    fn assign(
        &mut self,
        moves: &[(&[StateId], Vec<usize>)],
        idx: usize,
        sets: &mut [BitSet],
        kids: &[StateId],
        j: u32,
    ) -> bool {
        if idx == moves.len() {
            return true;
        }
        let (mv, feasible) = &moves[idx];
        for &i in feasible {
            let s = mv[i];
            if sets[i].contains(s) {
                if self.assign(moves, idx + 1, sets, kids, j) {
                    return true;
                }
            } else {
                sets[i].insert(s);
                let joint = sets[i].clone();
                // A set that cannot be defeated now cannot be defeated after
                // growing further, so failing here prunes the whole branch.
                if self.spoiler_kills(kids[i], &joint, j - 1)
                    && self.assign(moves, idx + 1, sets, kids, j)
                {
                    return true;
                }
                sets[i].remove(s);
            }
        }
        false
    }
}

/// One round of the upward game against a fixed snapshot relation.
///
/// Spoiler climbs occurrences of his state; Duplicator keeps the set of
/// states she can reach at the same node, and escapes when any of them is
/// snapshot-related to Spoiler's state.
struct UpGame<'a> {
    a: &'a TreeAutomaton,
    rules: &'a [Rule],
    occurrences: &'a [Vec<(usize, usize)>],
    by_slot: &'a HashMap<(SymbolId, usize, StateId), Vec<usize>>,
    snapshot: &'a Relation,
    side: &'a Relation,
    order: MoveOrder,
    memo: HashMap<(StateId, BitSet, u32), bool>,
}

impl<'a> UpGame<'a> {
    fn spoiler_wins(&mut self, p: StateId, cands: &BitSet, budget: u32, is_root: bool) -> bool {
        if !is_root && cands.iter().any(|d| self.snapshot.contains(p, d)) {
            // Duplicator stops here with a related pair.
            return false;
        }
        if cands.is_empty() {
            return true;
        }
        if budget == 0 {
            // Spoiler completed k climbs and Duplicator never escaped.
            return true;
        }
        let occurrences = self.occurrences;
        if occurrences[p].is_empty() {
            // Dead end: a legal maximal announcement when at least one climb
            // happened, no announcement at all at the root.
            return !is_root;
        }
        let key = (p, cands.clone(), budget);
        if !is_root {
            if let Some(&hit) = self.memo.get(&key) {
                return hit;
            }
        }
        let climb = |game: &mut Self, &(idx, pos): &(usize, usize)| {
            let rule = &game.rules[idx];
            let parent = rule.source;
            let mut next = BitSet::new(game.a.n_states());
            for d in cands.iter() {
                if let Some(matches) = game.by_slot.get(&(rule.symbol, pos, d)) {
                    for &midx in matches {
                        let m = &game.rules[midx];
                        let init_ok = !game.a.is_initial(parent) || game.a.is_initial(m.source);
                        let sides_ok = rule
                            .targets
                            .iter()
                            .zip(&m.targets)
                            .enumerate()
                            .all(|(i, (&x, &y))| i == pos || game.side.contains(x, y));
                        if init_ok && sides_ok {
                            next.insert(m.source);
                        }
                    }
                }
            }
            game.spoiler_wins(parent, &next, budget - 1, false)
        };
        let verdict = match self.order {
            MoveOrder::Forward => occurrences[p].iter().any(|occ| climb(self, occ)),
            MoveOrder::Reverse => occurrences[p].iter().rev().any(|occ| climb(self, occ)),
        };
        if !is_root {
            self.memo.insert(key, verdict);
        }
        verdict
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulation::{downward_simulation, upward_simulation};
    use crate::ta::Tree;
    use crate::testutil::{fixture, id_of};

    const SMALL: [&str; 8] = [
        "basic",
        "merge_gain",
        "leaf_choice",
        "chain_choice",
        "nonstrict_pair",
        "branch_choice",
        "lookahead_gap",
        "single_prune",
    ];

    fn forward2() -> GameConfig {
        GameConfig::new(2)
    }

    fn reverse2() -> GameConfig {
        let mut cfg = GameConfig::new(2);
        cfg.move_order = MoveOrder::Reverse;
        cfg
    }

    #[test]
    fn depth_one_collapses_to_the_plain_simulations() {
        for name in SMALL {
            let a = fixture(name);
            assert_eq!(
                lookahead_dw(&a, 1),
                downward_simulation(&a),
                "downward on {name}"
            );
            let id = Relation::identity(a.n_states());
            assert_eq!(
                lookahead_up(&a, 1, &id),
                upward_simulation(&a, &id),
                "upward(id) on {name}"
            );
            let dw = downward_simulation(&a);
            assert_eq!(
                lookahead_up(&a, 1, &dw),
                upward_simulation(&a, &dw),
                "upward(dw) on {name}"
            );
        }
    }

    #[test]
    fn lookahead_two_separates_the_gap_fixture() {
        let a = fixture("lookahead_gap");
        let r = id_of(&a, "r");
        let u = id_of(&a, "u");
        let dw = downward_simulation(&a);
        assert!(!dw.contains(r, u), "plain simulation must miss (r, u)");
        let la2 = lookahead_dw(&a, 2);
        assert!(la2.contains(r, u), "two-step lookahead must accept (r, u)");
        assert!(lookahead_dw_closed(&a, 2).contains(r, u));

        // Independent check that the pair is semantically sound: r and u
        // derive exactly the same trees (all trees over this alphabet up to
        // height 3 listed by hand).
        for text in ["b", "c", "a(b)", "a(c)", "a(a(b))", "a(a(c))"] {
            let t = Tree::parse(text).unwrap();
            let derivers = a.derivers(&t).unwrap();
            assert_eq!(
                derivers.contains(r),
                derivers.contains(u),
                "derivers of {text} disagree on r vs u"
            );
        }
        let ab = Tree::parse("a(b)").unwrap();
        assert!(a.derivers(&ab).unwrap().contains(r));
    }

    #[test]
    fn deeper_lookahead_never_loses_pairs_after_closure() {
        for name in SMALL {
            let a = fixture(name);
            let id = Relation::identity(a.n_states());
            for k in 1..=2u32 {
                let dw_lo = lookahead_dw_closed(&a, k);
                let dw_hi = lookahead_dw_closed(&a, k + 1);
                assert!(dw_lo.is_subset(&dw_hi), "downward monotonicity on {name} at k={k}");
                let up_lo = lookahead_up_closed(&a, k, &id);
                let up_hi = lookahead_up_closed(&a, k + 1, &id);
                assert!(up_lo.is_subset(&up_hi), "upward monotonicity on {name} at k={k}");
            }
        }
    }

    #[test]
    fn closed_relations_are_preorders_for_reflexive_inducing() {
        for name in SMALL {
            let a = fixture(name);
            let id = Relation::identity(a.n_states());
            for k in [1, 2, 3] {
                let dw = lookahead_dw_closed(&a, k);
                assert!(dw.is_preorder(), "closed downward on {name} at k={k}");
                let up = lookahead_up_closed(&a, k, &id);
                assert!(
                    Relation::identity(a.n_states()).is_subset(&up),
                    "identity lost from closed upward on {name} at k={k}"
                );
                assert!(up.is_preorder(), "closed upward on {name} at k={k}");
            }
        }
    }

    #[test]
    fn closed_downward_stays_inside_exact_inclusion() {
        for name in SMALL {
            let a = fixture(name);
            let exact = crate::oracle::exact_dw_inclusion_with_guard(
                &a,
                32,
                crate::oracle::DEFAULT_MACRO_GUARD,
            )
            .unwrap();
            for k in [1, 2, 3] {
                assert!(
                    lookahead_dw_closed(&a, k).is_subset(&exact),
                    "soundness on {name} at k={k}"
                );
            }
        }
    }

    #[test]
    fn upward_kernel_pairs_on_merge_gain_survive_the_deeper_game() {
        let a = fixture("merge_gain");
        let kernel = downward_simulation(&a)
            .kernel()
            .expect("downward simulation is a preorder");
        let q = id_of(&a, "q");
        let r = id_of(&a, "r");
        let one = lookahead_up(&a, 1, &kernel);
        let two = lookahead_up(&a, 2, &kernel);
        for rel in [&one, &two] {
            assert!(rel.contains(q, r));
            assert!(rel.contains(r, q));
        }
        let nontrivial: Vec<(usize, usize)> = one.pairs().filter(|&(x, y)| x != y).collect();
        assert_eq!(nontrivial, vec![(q, r), (r, q)]);
    }

    #[test]
    #[should_panic(expected = "dimension mismatch")]
    fn upward_game_rejects_mismatched_dimensions() {
        let a = fixture("basic");
        let wrong = Relation::identity(a.n_states() + 1);
        let _ = lookahead_up(&a, 2, &wrong);
    }

    #[test]
    fn config_clamps_depth_to_the_ceiling() {
        let cfg = GameConfig::new(40);
        assert_eq!(cfg.depth(), DEFAULT_MAX_K);
        let mut raised = GameConfig::new(40);
        raised.max_k = 64;
        assert_eq!(raised.depth(), 40);
    }

    #[test]
    fn move_order_does_not_change_verdicts_on_fixtures() {
        for name in SMALL {
            let a = fixture(name);
            assert_eq!(
                lookahead_dw_with(&a, forward2()),
                lookahead_dw_with(&a, reverse2()),
                "downward order independence on {name}"
            );
            let id = Relation::identity(a.n_states());
            assert_eq!(
                lookahead_up_with(&a, forward2(), &id),
                lookahead_up_with(&a, reverse2(), &id),
                "upward order independence on {name}"
            );
        }
    }

    #[test]
    fn move_order_does_not_change_verdicts_on_random_automata() {
        use crate::bench::{generate, TvParams};
        for seed in 0..20 {
            let a = generate(&TvParams::new(7, 2, 1.5, 0.6, seed)).unwrap();
            assert_eq!(
                lookahead_dw_with(&a, forward2()),
                lookahead_dw_with(&a, reverse2()),
                "downward order independence on seed {seed}"
            );
            let id = Relation::identity(a.n_states());
            assert_eq!(
                lookahead_up_with(&a, forward2(), &id),
                lookahead_up_with(&a, reverse2(), &id),
                "upward order independence on seed {seed}"
            );
        }
    }
}
