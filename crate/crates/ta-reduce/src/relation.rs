//! Dense binary relations over state indices, with the order-theoretic
//! operations the reduction pipeline relies on: transitive closure, strict
//! parts, equivalence kernels, and liftings to tuples.

use thiserror::Error;

use crate::bits::BitSet;
use crate::ta::TreeAutomaton;

/// A binary relation on `0..dim`, stored as one bit row per left element.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Relation {
    dim: usize,
    rows: Vec<BitSet>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RelationError {
    #[error("relation is not reflexive: ({0},{0}) missing")]
    NotReflexive(usize),
    #[error("relation is not transitive: ({0},{1}) and ({1},{2}) but not ({0},{2})")]
    NotTransitive(usize, usize, usize),
    #[error("relation is not symmetric: ({0},{1}) without ({1},{0})")]
    NotSymmetric(usize, usize),
}

impl Relation {
    pub fn empty(dim: usize) -> Relation {
        Relation {
            dim,
            rows: vec![BitSet::new(dim); dim],
        }
    }

    pub fn identity(dim: usize) -> Relation {
        let mut r = Relation::empty(dim);
        for i in 0..dim {
            r.rows[i].insert(i);
        }
        r
    }

    pub fn full(dim: usize) -> Relation {
        let mut r = Relation::empty(dim);
        for row in &mut r.rows {
            for j in 0..dim {
                row.insert(j);
            }
        }
        r
    }

    pub fn from_pairs(dim: usize, pairs: &[(usize, usize)]) -> Relation {
        let mut r = Relation::empty(dim);
        for &(p, q) in pairs {
            r.insert(p, q);
        }
        r
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn contains(&self, p: usize, q: usize) -> bool {
        self.rows[p].contains(q)
    }

    pub fn insert(&mut self, p: usize, q: usize) {
        self.rows[p].insert(q);
    }

    pub fn remove(&mut self, p: usize, q: usize) {
        self.rows[p].remove(q);
    }

    pub fn row(&self, p: usize) -> &BitSet {
        &self.rows[p]
    }

    /// Intersects row `p` with the given set of right elements.
    pub fn row_intersect(&mut self, p: usize, keep: &BitSet) {
        self.rows[p].intersect_with(keep);
    }

    /// Number of related pairs.
    pub fn len(&self) -> usize {
        self.rows.iter().map(|r| r.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.iter().all(|r| r.is_empty())
    }

    /// Pairs in row-major order.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.rows
            .iter()
            .enumerate()
            .flat_map(|(p, row)| row.iter().map(move |q| (p, q)))
    }

    pub fn inverse(&self) -> Relation {
        let mut r = Relation::empty(self.dim);
        for (p, q) in self.pairs() {
            r.insert(q, p);
        }
        r
    }

    pub fn union(&self, other: &Relation) -> Relation {
        assert_eq!(self.dim, other.dim, "relation dimension mismatch");
        let mut r = self.clone();
        for (row, o) in r.rows.iter_mut().zip(&other.rows) {
            row.union_with(o);
        }
        r
    }

    pub fn intersection(&self, other: &Relation) -> Relation {
        assert_eq!(self.dim, other.dim, "relation dimension mismatch");
        let mut r = self.clone();
        for (row, o) in r.rows.iter_mut().zip(&other.rows) {
            row.intersect_with(o);
        }
        r
    }

    /// Whether every pair of `self` is also in `other`.
    pub fn is_subset(&self, other: &Relation) -> bool {
        assert_eq!(self.dim, other.dim, "relation dimension mismatch");
        self.rows
            .iter()
            .zip(&other.rows)
            .all(|(a, b)| a.is_subset(b))
    }

    /// Relational composition: `(p,r)` iff `p self q` and `q other r`.
    pub fn compose(&self, other: &Relation) -> Relation {
        assert_eq!(self.dim, other.dim, "relation dimension mismatch");
        let mut r = Relation::empty(self.dim);
        for p in 0..self.dim {
            for q in self.rows[p].iter() {
                r.rows[p].union_with(&other.rows[q]);
            }
        }
        r
    }

    pub fn is_reflexive(&self) -> bool {
        (0..self.dim).all(|i| self.contains(i, i))
    }

    pub fn is_irreflexive(&self) -> bool {
        (0..self.dim).all(|i| !self.contains(i, i))
    }

    pub fn is_transitive(&self) -> bool {
        self.transitivity_witness().is_none()
    }

    fn transitivity_witness(&self) -> Option<(usize, usize, usize)> {
        for p in 0..self.dim {
            for q in self.rows[p].iter() {
                if !self.rows[q].is_subset(&self.rows[p]) {
                    let r = self.rows[q]
                        .iter()
                        .find(|&r| !self.rows[p].contains(r))
                        .unwrap();
                    return Some((p, q, r));
                }
            }
        }
        None
    }

    pub fn is_preorder(&self) -> bool {
        self.is_reflexive() && self.is_transitive()
    }

    fn check_preorder(&self) -> Result<(), RelationError> {
        if let Some(i) = (0..self.dim).find(|&i| !self.contains(i, i)) {
            return Err(RelationError::NotReflexive(i));
        }
        if let Some((p, q, r)) = self.transitivity_witness() {
            return Err(RelationError::NotTransitive(p, q, r));
        }
        Ok(())
    }

    /// Transitive closure, by squaring the relation until it stabilizes.
    pub fn transitive_closure(&self) -> Relation {
        let mut r = self.clone();
        loop {
            let mut next = r.clone();
            for p in 0..self.dim {
                for q in r.rows[p].iter() {
                    next.rows[p].union_with(&r.rows[q]);
                }
            }
            if next == r {
                return r;
            }
            r = next;
        }
    }

    /// The strict part `{(p,q) : p R q and not q R p}` of a preorder.
    pub fn strict_part(&self) -> Result<Relation, RelationError> {
        self.check_preorder()?;
        let mut r = Relation::empty(self.dim);
        for (p, q) in self.pairs() {
            if !self.contains(q, p) {
                r.insert(p, q);
            }
        }
        Ok(r)
    }

    /// The equivalence kernel `R ∩ R⁻¹` of a preorder.
    pub fn kernel(&self) -> Result<Relation, RelationError> {
        self.check_preorder()?;
        Ok(self.intersection(&self.inverse()))
    }
}

/// Tuple lifting of a relation: every component related pointwise.
/// Both tuples must have the same length.
pub fn lift_nonstrict(rel: &Relation, u: &[usize], v: &[usize]) -> bool {
    assert_eq!(u.len(), v.len(), "lifted tuples must have equal length");
    u.iter().zip(v).all(|(&a, &b)| rel.contains(a, b))
}

/// Strict tuple lifting of a preorder: every component related pointwise
/// and at least one component strictly (related one way only). The strict
/// part is derived from `rel` itself, so `rel` should be a preorder.
pub fn lift_strict(rel: &Relation, u: &[usize], v: &[usize]) -> bool {
    assert_eq!(u.len(), v.len(), "lifted tuples must have equal length");
    lift_nonstrict(rel, u, v)
        && u.iter()
            .zip(v)
            .any(|(&a, &b)| rel.contains(a, b) && !rel.contains(b, a))
}

/// Partition of `0..n` into equivalence classes. Classes are ordered by
/// their least member and list their members in ascending order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    class_of: Vec<usize>,
    classes: Vec<Vec<usize>>,
}

impl Partition {
    /// Builds the partition induced by an equivalence relation; fails if
    /// the relation is not reflexive, symmetric, and transitive.
    pub fn from_equivalence(rel: &Relation) -> Result<Partition, RelationError> {
        rel.check_preorder()?;
        if let Some((p, q)) = rel.pairs().find(|&(p, q)| !rel.contains(q, p)) {
            return Err(RelationError::NotSymmetric(p, q));
        }
        let n = rel.dim();
        let mut class_of = vec![usize::MAX; n];
        let mut classes = Vec::new();
        for p in 0..n {
            if class_of[p] != usize::MAX {
                continue;
            }
            let id = classes.len();
            let members: Vec<usize> = rel.row(p).iter().collect();
            for &m in &members {
                class_of[m] = id;
            }
            classes.push(members);
        }
        Ok(Partition { class_of, classes })
    }

    pub fn n_elements(&self) -> usize {
        self.class_of.len()
    }

    pub fn n_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn class_of(&self, p: usize) -> usize {
        self.class_of[p]
    }

    pub fn classes(&self) -> &[Vec<usize>] {
        &self.classes
    }

    /// Least member of the class containing `p`.
    pub fn representative(&self, p: usize) -> usize {
        self.classes[self.class_of[p]][0]
    }

    pub fn is_identity(&self) -> bool {
        self.classes.iter().all(|c| c.len() == 1)
    }
}

/// Renders a relation over an automaton's states as sorted `p <= q` lines,
/// one pair per line, in state-index order.
pub fn dump_relation(a: &TreeAutomaton, rel: &Relation) -> String {
    assert_eq!(rel.dim(), a.n_states(), "relation dimension mismatch");
    let mut out = String::new();
    for (p, q) in rel.pairs() {
        out.push_str(&format!("{} <= {}\n", a.state_name(p), a.state_name(q)));
    }
    out
}
