//! Downward and upward simulation preorders, and the combined preorder
//! built from a downward simulation and an upward simulation it induces.
//!
//! All three are computed by greatest-fixpoint refinement: start from the
//! coarsest candidate relation and delete pairs that violate the defining
//! clause until nothing changes. The fixpoint is unique, so the iteration
//! order only affects timing, never the result.

use std::collections::HashMap;

use crate::relation::Relation;
use crate::ta::{StateId, SymbolId, TreeAutomaton};

/// The maximal downward simulation: `q ⊑ r` iff every rule of `q` can be
/// matched by a same-symbol rule of `r` whose targets simulate
/// componentwise. Starts from the full relation.
pub fn downward_simulation(a: &TreeAutomaton) -> Relation {
    let n = a.n_states();
    let mut rel = Relation::full(n);
    let mut changed = true;
    while changed {
        changed = false;
        for q in 0..n {
            for r in 0..n {
                if q == r || !rel.contains(q, r) {
                    continue;
                }
                let ok = a.rules_from(q).iter().all(|rule| {
                    a.rules_from(r).iter().any(|m| {
                        m.symbol == rule.symbol
                            && rule
                                .targets
                                .iter()
                                .zip(&m.targets)
                                .all(|(&x, &y)| rel.contains(x, y))
                    })
                });
                if !ok {
                    rel.remove(q, r);
                    changed = true;
                }
            }
        }
    }
    rel
}

/// The maximal upward simulation induced by `inducing` (closed
/// transitively first). `q ⊑ r` requires that `q` being ψ forces `r` to be
/// ψ and `q` being initial forces `r` to be initial, and that every
/// occurrence of `q` as a rule target is matched by a rule with the same
/// symbol carrying `r` at the same position, with the remaining targets
/// related by the induced closure and the sources again related upward.
pub fn upward_simulation(a: &TreeAutomaton, inducing: &Relation) -> Relation {
    let n = a.n_states();
    assert_eq!(inducing.dim(), n, "inducing relation dimension mismatch");
    let side = inducing.transitive_closure();

    // Occurrences of each state as a rule target, and rules indexed by
    // (symbol, position, target) for the matching loop.
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

    let mut changed = true;
    while changed {
        changed = false;
        for q in 0..n {
            for r in 0..n {
                if !rel.contains(q, r) {
                    continue;
                }
                let ok = occurrences[q].iter().all(|&(idx, pos)| {
                    let rule = &rules[idx];
                    by_slot
                        .get(&(rule.symbol, pos, r))
                        .map_or(false, |candidates| {
                            candidates.iter().any(|&midx| {
                                let m = &rules[midx];
                                rel.contains(rule.source, m.source)
                                    && rule.targets.iter().zip(&m.targets).enumerate().all(
                                        |(j, (&x, &y))| j == pos || side.contains(x, y),
                                    )
                            })
                        })
                });
                if !ok {
                    rel.remove(q, r);
                    changed = true;
                }
            }
        }
    }
    rel
}

/// The combined preorder `W = D ⊕ U⁻¹` for a downward simulation preorder
/// `D` and an upward simulation `U` induced by it: `x W y` iff some
/// mediator `z` has `x D z` and `y U z`, and every `z` with `y D z` admits
/// a mediator for `(x, z)` as well.
pub fn combined_preorder(a: &TreeAutomaton, d: &Relation, u: &Relation) -> Relation {
    let n = a.n_states();
    assert_eq!(d.dim(), n, "downward relation dimension mismatch");
    assert_eq!(u.dim(), n, "upward relation dimension mismatch");
    let c = d.compose(&u.inverse());
    let mut w = Relation::empty(n);
    for (x, y) in c.pairs() {
        if d.row(y).is_subset(c.row(x)) {
            w.insert(x, y);
        }
    }
    w
}
