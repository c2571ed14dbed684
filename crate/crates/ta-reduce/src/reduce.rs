//! Reduction passes for tree automata: transition pruning, state
//! quotienting, and the pipelines that combine them.
//!
//! Pruning removes transitions dominated under a strict partial order built
//! from a source-side and a target-side relation; quotienting merges states
//! related by the kernel of a preorder. Not every such pass preserves the
//! accepted language, so this module keeps two catalogs recording which
//! combinations are certified, and the pipelines consult them on every step.

use std::fmt;
use std::time::Instant;

use thiserror::Error;

use crate::lookahead::{lookahead_dw_closed, lookahead_up_closed};
use crate::relation::{lift_nonstrict, lift_strict, Partition, Relation, RelationError};
use crate::simulation::{downward_simulation, upward_simulation};
use crate::ta::{Rule, TreeAutomaton};

/// The relation families a reduction pass can be built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    /// The identity relation on states.
    Identity,
    /// Downward simulation.
    DwSim,
    /// Downward lookahead simulation of a given depth, transitively closed.
    DwLa,
    /// Upward simulation induced by a downward relation.
    UpSim,
    /// Upward lookahead simulation of a given depth, transitively closed.
    UpLa,
}

/// A symbolic description of a state relation: the family, whether the
/// strict part is taken, the lookahead depth for lookahead families, and
/// the inducing relation for upward families.
///
/// Specs have a token form used by the CLI and by pass labels: `id`,
/// `dw-sim`, `dw-la:K`, `up-sim:IND`, `up-la:K:IND`, with a trailing `!`
/// for the strict part. Inducing relations use the short tokens `id`,
/// `dwsim`, `dwla:J`, parenthesized when themselves strict: `up-sim:(dwsim!)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelationSpec {
    pub family: Family,
    pub strict: bool,
    pub k: Option<u32>,
    pub inducing: Option<Box<RelationSpec>>,
}

impl RelationSpec {
    /// The identity relation.
    pub fn identity() -> RelationSpec {
        RelationSpec {
            family: Family::Identity,
            strict: false,
            k: None,
            inducing: None,
        }
    }

    /// Downward simulation.
    pub fn dw_sim() -> RelationSpec {
        RelationSpec {
            family: Family::DwSim,
            strict: false,
            k: None,
            inducing: None,
        }
    }

    /// Depth-`k` downward lookahead simulation.
    pub fn dw_la(k: u32) -> RelationSpec {
        RelationSpec {
            family: Family::DwLa,
            strict: false,
            k: Some(k),
            inducing: None,
        }
    }

    /// Upward simulation induced by `inducing`.
    pub fn up_sim(inducing: RelationSpec) -> RelationSpec {
        RelationSpec {
            family: Family::UpSim,
            strict: false,
            k: None,
            inducing: Some(Box::new(inducing)),
        }
    }

    /// Depth-`k` upward lookahead simulation induced by `inducing`.
    pub fn up_la(k: u32, inducing: RelationSpec) -> RelationSpec {
        RelationSpec {
            family: Family::UpLa,
            strict: false,
            k: Some(k),
            inducing: Some(Box::new(inducing)),
        }
    }

    /// This spec with the strict flag set.
    pub fn strict(mut self) -> RelationSpec {
        self.strict = true;
        self
    }

    /// Checks that the shape is well formed: lookahead families carry a
    /// positive depth, upward families carry a downward inducing relation,
    /// and nothing carries parameters its family does not take.
    pub fn validate(&self) -> Result<(), SpecError> {
        match self.family {
            Family::Identity | Family::DwSim | Family::UpSim => {
                if self.k.is_some() {
                    return Err(SpecError::UnexpectedK(self.family));
                }
            }
            Family::DwLa | Family::UpLa => match self.k {
                None => return Err(SpecError::MissingK(self.family)),
                Some(0) => return Err(SpecError::ZeroK),
                Some(_) => {}
            },
        }
        match self.family {
            Family::Identity | Family::DwSim | Family::DwLa => {
                if self.inducing.is_some() {
                    return Err(SpecError::UnexpectedInducing(self.family));
                }
            }
            Family::UpSim | Family::UpLa => match self.inducing.as_deref() {
                None => return Err(SpecError::MissingInducing(self.family)),
                Some(inner) => {
                    if matches!(inner.family, Family::UpSim | Family::UpLa) {
                        return Err(SpecError::InducingNotDownward(inner.family));
                    }
                    inner.validate()?;
                }
            },
        }
        Ok(())
    }

    /// Parses the token form. The result is always validated.
    pub fn parse_token(text: &str) -> Result<RelationSpec, SpecError> {
        let bad = || SpecError::BadToken(text.to_string());
        let (base, strict) = match text.strip_suffix('!') {
            Some(b) => (b, true),
            None => (text, false),
        };
        let mut spec = if base == "id" {
            RelationSpec::identity()
        } else if base == "dw-sim" {
            RelationSpec::dw_sim()
        } else if let Some(rest) = base.strip_prefix("dw-la:") {
            RelationSpec::dw_la(rest.parse().map_err(|_| bad())?)
        } else if let Some(rest) = base.strip_prefix("up-sim:") {
            RelationSpec::up_sim(parse_inducing(rest).ok_or_else(bad)?)
        } else if let Some(rest) = base.strip_prefix("up-la:") {
            let (k, ind) = rest.split_once(':').ok_or_else(bad)?;
            RelationSpec::up_la(
                k.parse().map_err(|_| bad())?,
                parse_inducing(ind).ok_or_else(bad)?,
            )
        } else {
            return Err(bad());
        };
        spec.strict = strict || spec.strict;
        spec.validate()?;
        Ok(spec)
    }
}

fn parse_inducing(text: &str) -> Option<RelationSpec> {
    if let Some(inner) = text.strip_prefix('(').and_then(|t| t.strip_suffix(')')) {
        let (base, strict) = match inner.strip_suffix('!') {
            Some(b) => (b, true),
            None => (inner, false),
        };
        let mut spec = short_inducing(base)?;
        spec.strict = strict;
        Some(spec)
    } else {
        short_inducing(text)
    }
}

fn short_inducing(text: &str) -> Option<RelationSpec> {
    if text == "id" {
        Some(RelationSpec::identity())
    } else if text == "dwsim" {
        Some(RelationSpec::dw_sim())
    } else if let Some(rest) = text.strip_prefix("dwla:") {
        rest.parse().ok().map(RelationSpec::dw_la)
    } else {
        None
    }
}

fn inducing_token(spec: Option<&RelationSpec>) -> String {
    let Some(spec) = spec else {
        return "?".to_string();
    };
    let short = match spec.family {
        Family::Identity => "id".to_string(),
        Family::DwSim => "dwsim".to_string(),
        Family::DwLa => format!(
            "dwla:{}",
            spec.k.map_or_else(|| "?".to_string(), |k| k.to_string())
        ),
        // Not a valid inducing family; render it fully so the token is
        // still readable in diagnostics.
        Family::UpSim | Family::UpLa => return format!("({})", spec),
    };
    if spec.strict {
        format!("({}!)", short)
    } else {
        short
    }
}

impl fmt::Display for RelationSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let k = || self.k.map_or_else(|| "?".to_string(), |k| k.to_string());
        let base = match self.family {
            Family::Identity => "id".to_string(),
            Family::DwSim => "dw-sim".to_string(),
            Family::DwLa => format!("dw-la:{}", k()),
            Family::UpSim => format!("up-sim:{}", inducing_token(self.inducing.as_deref())),
            Family::UpLa => format!(
                "up-la:{}:{}",
                k(),
                inducing_token(self.inducing.as_deref())
            ),
        };
        write!(f, "{}{}", base, if self.strict { "!" } else { "" })
    }
}

/// Malformed relation specs and tokens.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SpecError {
    #[error("relation family {0:?} requires a lookahead depth")]
    MissingK(Family),
    #[error("relation family {0:?} does not take a lookahead depth")]
    UnexpectedK(Family),
    #[error("lookahead depth must be at least 1")]
    ZeroK,
    #[error("relation family {0:?} requires an inducing relation")]
    MissingInducing(Family),
    #[error("relation family {0:?} does not take an inducing relation")]
    UnexpectedInducing(Family),
    #[error("inducing relations must be downward, not {0:?}")]
    InducingNotDownward(Family),
    #[error("the source side of a prune order must be upward or the identity, not {0:?}")]
    NotUpwardSide(Family),
    #[error("the target side of a prune order must be downward or the identity, not {0:?}")]
    NotDownwardSide(Family),
    #[error("unrecognized relation token {0:?}")]
    BadToken(String),
}

/// Catalog answer for a candidate pass.
///
/// `Yes` certifies that the pass preserves the language. `No` declines to
/// certify it: for the tabulated combinations a counterexample is known,
/// and untabulated ones are answered conservatively. `Invalid` marks
/// shapeless combinations (for pruning, neither side strict, so the order
/// would have to be reflexive; for quotienting, a strict relation, whose
/// kernel is empty).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Yes,
    No,
    Invalid,
}

use Verdict::{Invalid, No, Yes};

// Columns of the pruning catalog: the target-side relation, in the order
// identity, strict downward simulation, downward simulation, strict
// downward trace approximation, downward trace approximation. Lookahead
// relations approximate trace inclusion, so they map to the trace columns
// regardless of depth.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum DwCol {
    Id = 0,
    SimStrict = 1,
    Sim = 2,
    TraceStrict = 3,
    Trace = 4,
}

// Column of a validated downward-or-identity spec. Strict identity has no
// column: its order contribution is empty and is treated specially.
fn dw_col(spec: &RelationSpec) -> Option<DwCol> {
    match (spec.family, spec.strict) {
        (Family::Identity, true) => None,
        (Family::Identity, false) => Some(DwCol::Id),
        (Family::DwSim, true) => Some(DwCol::SimStrict),
        (Family::DwSim, false) => Some(DwCol::Sim),
        (Family::DwLa, true) => Some(DwCol::TraceStrict),
        (Family::DwLa, false) => Some(DwCol::Trace),
        _ => unreachable!("caller checks that the family is downward"),
    }
}

const ROW_IDENTITY: [Verdict; 5] = [Invalid, Yes, Invalid, Yes, Invalid];
const ROW_ALL_YES: [Verdict; 5] = [Yes; 5];
const ROW_ALL_NO: [Verdict; 5] = [No; 5];
const ROW_STRICT_UP_BY_SIM: [Verdict; 5] = [No, Yes, No, No, No];
const ROW_STRICT_UP_TRACE_BY_ID: [Verdict; 5] = [Yes, Yes, No, No, No];
const ROW_NONSTRICT_UP_BY_SIM: [Verdict; 5] = [Invalid, Yes, Invalid, No, Invalid];
const ROW_NONSTRICT_UP_BY_TRACE: [Verdict; 5] = [Invalid, No, Invalid, No, Invalid];

/// Rows of the pruning catalog.
///
/// Almost all rows are named by a [`RelationSpec`]. The remaining row is a
/// strict upward simulation induced by a downup relation, a relation whose
/// pairs are jointly witnessed downward and upward; the identity is always
/// one, and since verifying that property for an arbitrary relation is not
/// supported, only the identity instance is exposed here.
#[derive(Debug, Clone, Copy)]
pub enum GfpRow<'a> {
    Spec(&'a RelationSpec),
    StrictUpSimDownupIdentity,
}

/// Looks up the pruning catalog for a source-side row and a target-side
/// spec. Errors on malformed or wrong-sided specs; strictness parity is
/// not checked here, only when an order is actually built.
pub fn gfp_allowed_row(u: GfpRow<'_>, d: &RelationSpec) -> Result<Verdict, SpecError> {
    d.validate()?;
    if matches!(d.family, Family::UpSim | Family::UpLa) {
        return Err(SpecError::NotDownwardSide(d.family));
    }
    let row = match u {
        GfpRow::StrictUpSimDownupIdentity => ROW_ALL_YES,
        GfpRow::Spec(spec) => {
            spec.validate()?;
            if matches!(spec.family, Family::DwSim | Family::DwLa) {
                return Err(SpecError::NotUpwardSide(spec.family));
            }
            if spec.family == Family::Identity {
                if spec.strict {
                    // The strict part of the identity is empty, so the
                    // order is empty and pruning is a no-op.
                    return Ok(Yes);
                }
                ROW_IDENTITY
            } else {
                let inducing = spec
                    .inducing
                    .as_deref()
                    .expect("validated upward specs carry an inducing relation");
                let Some(col) = dw_col(inducing) else {
                    // Strict-identity inducing is outside the certified
                    // table; answer conservatively.
                    return Ok(No);
                };
                match (spec.family, spec.strict, col) {
                    (Family::UpSim, true, DwCol::Id) => ROW_ALL_YES,
                    (Family::UpSim, true, DwCol::SimStrict | DwCol::Sim) => ROW_STRICT_UP_BY_SIM,
                    (Family::UpSim, true, DwCol::TraceStrict | DwCol::Trace) => ROW_ALL_NO,
                    (Family::UpLa, true, DwCol::Id) => ROW_STRICT_UP_TRACE_BY_ID,
                    (Family::UpLa, true, DwCol::SimStrict | DwCol::Sim) => ROW_STRICT_UP_BY_SIM,
                    (Family::UpLa, true, DwCol::TraceStrict | DwCol::Trace) => ROW_ALL_NO,
                    (_, false, DwCol::Id | DwCol::SimStrict | DwCol::Sim) => ROW_NONSTRICT_UP_BY_SIM,
                    (_, false, DwCol::TraceStrict | DwCol::Trace) => ROW_NONSTRICT_UP_BY_TRACE,
                    _ => unreachable!("all upward shapes are covered"),
                }
            }
        }
    };
    Ok(match dw_col(d) {
        // Strict identity on the target side lifts to an empty tuple
        // order, so pruning is a no-op.
        None => Yes,
        Some(col) => row[col as usize],
    })
}

/// As [`gfp_allowed_row`] with the row named by a spec.
pub fn gfp_allowed(u: &RelationSpec, d: &RelationSpec) -> Result<Verdict, SpecError> {
    gfp_allowed_row(GfpRow::Spec(u), d)
}

/// Looks up the quotienting catalog: may the automaton be quotiented by
/// the kernel of the given preorder?
pub fn gfq_allowed(r: &RelationSpec) -> Result<Verdict, SpecError> {
    r.validate()?;
    if r.strict {
        return Ok(Invalid);
    }
    Ok(match r.family {
        Family::Identity | Family::DwSim | Family::DwLa => Yes,
        Family::UpSim | Family::UpLa => {
            let inducing = r
                .inducing
                .as_deref()
                .expect("validated upward specs carry an inducing relation");
            if inducing.strict {
                Invalid
            } else if inducing.family == Family::Identity {
                Yes
            } else {
                No
            }
        }
    })
}

/// Failures while building or applying reduction passes.
#[derive(Debug, Error)]
pub enum ReduceError {
    #[error(transparent)]
    Spec(#[from] SpecError),
    #[error(transparent)]
    Relation(#[from] RelationError),
    #[error("pruning requires exactly one strict side; both are strict")]
    BothStrict,
    #[error("pruning requires exactly one strict side; neither is strict")]
    BothNonstrict,
    #[error("the catalog does not certify this prune combination (verdict {0:?}); use force to override")]
    CatalogRejected(Verdict),
    #[error("relation dimension {found} does not match expected {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("quotient would merge the acceptance state {psi} with {other}")]
    PsiMerged { psi: String, other: String },
}

// Pairs of `rel` whose reverse is absent. For a transitive input this is a
// strict partial order even when `rel` is not reflexive, which is why it
// is used instead of `Relation::strict_part`: upward simulations induced
// by strict relations lose parts of their diagonal.
fn asymmetric_part(rel: &Relation) -> Relation {
    let pairs: Vec<(usize, usize)> = rel
        .pairs()
        .filter(|&(p, q)| !rel.row(q).contains(p))
        .collect();
    Relation::from_pairs(rel.dim(), &pairs)
}

/// Computes the relation a spec describes on the states of `a`, including
/// the outer strictness: strict specs yield the asymmetric part of the
/// transitive closure of the underlying relation.
pub fn realize(a: &TreeAutomaton, spec: &RelationSpec) -> Result<Relation, SpecError> {
    spec.validate()?;
    let base = realize_checked(a, spec);
    Ok(base)
}

/// Computes the underlying relation of a spec, ignoring the outer strict
/// flag. This is the form [`build_prune_order`] expects, since strictness
/// is applied differently on the two sides of an order.
pub fn realize_base(a: &TreeAutomaton, spec: &RelationSpec) -> Result<Relation, SpecError> {
    spec.validate()?;
    Ok(realize_base_checked(a, spec))
}

fn realize_checked(a: &TreeAutomaton, spec: &RelationSpec) -> Relation {
    let base = realize_base_checked(a, spec);
    if spec.strict {
        asymmetric_part(&base.transitive_closure())
    } else {
        base
    }
}

fn realize_base_checked(a: &TreeAutomaton, spec: &RelationSpec) -> Relation {
    match spec.family {
        Family::Identity => Relation::identity(a.n_states()),
        Family::DwSim => downward_simulation(a),
        Family::DwLa => lookahead_dw_closed(a, spec.k.expect("validated lookahead spec has a depth")),
        Family::UpSim => {
            let inducing = spec.inducing.as_deref().expect("validated upward spec");
            upward_simulation(a, &realize_checked(a, inducing))
        }
        Family::UpLa => {
            let inducing = spec.inducing.as_deref().expect("validated upward spec");
            lookahead_up_closed(
                a,
                spec.k.expect("validated lookahead spec has a depth"),
                &realize_checked(a, inducing),
            )
        }
    }
}

/// A strict partial order on the rules of a fixed automaton. A pair
/// `(i, j)` records that rule `i` is dominated by rule `j` and may be
/// removed.
#[derive(Debug, Clone)]
pub struct PruneOrder {
    order: Relation,
}

impl PruneOrder {
    /// The empty order over `n_rules` rules; pruning by it is a no-op.
    pub fn empty(n_rules: usize) -> PruneOrder {
        PruneOrder {
            order: Relation::empty(n_rules),
        }
    }

    /// The underlying relation over rule indices.
    pub fn order(&self) -> &Relation {
        &self.order
    }

    /// All dominated/dominating pairs of rule indices.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.order.pairs()
    }
}

/// Builds the rule domination order from a source-side and a target-side
/// relation, each given with the spec describing it. Relations are passed
/// in their underlying (nonstrict) form, as produced by [`realize_base`];
/// the specs' strict flags choose which side the strictness falls on:
/// a strictly dominated source with componentwise dominated targets, or a
/// dominated source with strictly dominated targets. Exactly one side must
/// be strict. The combination is checked against the pruning catalog
/// unless `force` is set; the result is asserted irreflexive and
/// transitive.
pub fn build_prune_order(
    a: &TreeAutomaton,
    u: &Relation,
    u_spec: &RelationSpec,
    d: &Relation,
    d_spec: &RelationSpec,
    force: bool,
) -> Result<PruneOrder, ReduceError> {
    u_spec.validate()?;
    d_spec.validate()?;
    match (u_spec.strict, d_spec.strict) {
        (true, true) => return Err(ReduceError::BothStrict),
        (false, false) => return Err(ReduceError::BothNonstrict),
        _ => {}
    }
    let n = a.n_states();
    for rel in [u, d] {
        if rel.dim() != n {
            return Err(ReduceError::DimensionMismatch {
                expected: n,
                found: rel.dim(),
            });
        }
    }
    let verdict = gfp_allowed(u_spec, d_spec)?;
    if !force && verdict != Yes {
        return Err(ReduceError::CatalogRejected(verdict));
    }

    let u_c = u.transitive_closure();
    let d_c = d.transitive_closure();
    let u_strict = u_spec.strict.then(|| asymmetric_part(&u_c));

    let rules = a.rules();
    let m = rules.len();
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    for i in 0..m {
        for j in 0..m {
            if i == j || rules[i].symbol != rules[j].symbol {
                continue;
            }
            let (ri, rj) = (&rules[i], &rules[j]);
            let dominated = match &u_strict {
                Some(us) => {
                    us.row(ri.source).contains(rj.source)
                        && lift_nonstrict(&d_c, &ri.targets, &rj.targets)
                }
                None => {
                    u_c.row(ri.source).contains(rj.source)
                        && lift_strict(&d_c, &ri.targets, &rj.targets)
                }
            };
            if dominated {
                pairs.push((i, j));
            }
        }
    }
    let order = Relation::from_pairs(m, &pairs);
    assert!(order.is_irreflexive(), "prune orders are irreflexive");
    assert!(order.is_transitive(), "prune orders are transitive");
    Ok(PruneOrder { order })
}

/// Removes every rule dominated under the order, in a single pass: a rule
/// is kept exactly when nothing dominates it. Removals never cascade;
/// transitivity of the order guarantees every removed rule still has a
/// surviving dominator.
pub fn prune(a: &TreeAutomaton, order: &PruneOrder) -> Result<TreeAutomaton, ReduceError> {
    let m = a.rules().len();
    if order.order.dim() != m {
        return Err(ReduceError::DimensionMismatch {
            expected: m,
            found: order.order.dim(),
        });
    }
    let kept: Vec<Rule> = a
        .rules()
        .iter()
        .enumerate()
        .filter(|(i, _)| order.order.row(*i).is_empty())
        .map(|(_, r)| r.clone())
        .collect();
    let names: Vec<String> = a
        .visible_states()
        .map(|q| a.state_name(q).to_string())
        .collect();
    Ok(TreeAutomaton::from_parts(
        a.name(),
        a.alphabet().clone(),
        names,
        a.initials().to_vec(),
        kept,
        a.comments().to_vec(),
    )
    .expect("removing rules preserves validity"))
}

/// Merges the states of each equivalence class into its least member,
/// which becomes the class representative, and appends a
/// `merged {..} -> rep` comment per nontrivial class. Errors if the input
/// is not an equivalence or if a class would swallow the acceptance state.
pub fn quotient(a: &TreeAutomaton, equiv: &Relation) -> Result<TreeAutomaton, ReduceError> {
    let n = a.n_states();
    if equiv.dim() != n {
        return Err(ReduceError::DimensionMismatch {
            expected: n,
            found: equiv.dim(),
        });
    }
    let partition = Partition::from_equivalence(equiv)?;
    let classes = partition.classes();
    let mut cls = vec![0usize; n];
    for (idx, members) in classes.iter().enumerate() {
        for &m in members {
            cls[m] = idx;
        }
    }
    let psi = a.psi();
    let psi_class = &classes[cls[psi]];
    if psi_class.len() > 1 {
        let other = *psi_class.iter().find(|&&m| m != psi).unwrap();
        return Err(ReduceError::PsiMerged {
            psi: a.state_name(psi).to_string(),
            other: a.state_name(other).to_string(),
        });
    }
    // Classes are ordered by least member, so the acceptance state's
    // singleton class is last and the remaining classes, in order, become
    // the new visible states; the mapped acceptance id lines up.
    debug_assert_eq!(cls[psi], classes.len() - 1);
    let n_new = classes.len() - 1;
    let names: Vec<String> = classes[..n_new]
        .iter()
        .map(|c| a.state_name(c[0]).to_string())
        .collect();
    let initials: Vec<usize> = a.initials().iter().map(|&i| cls[i]).collect();
    let rules: Vec<Rule> = a
        .rules()
        .iter()
        .map(|r| Rule {
            source: cls[r.source],
            symbol: r.symbol,
            targets: r.targets.iter().map(|&t| cls[t]).collect(),
        })
        .collect();
    let mut comments = a.comments().to_vec();
    for class in classes[..n_new].iter().filter(|c| c.len() > 1) {
        let members: Vec<&str> = class.iter().map(|&m| a.state_name(m)).collect();
        comments.push(format!("merged {{{}}} -> {}", members.join(","), members[0]));
    }
    Ok(TreeAutomaton::from_parts(
        a.name(),
        a.alphabet().clone(),
        names,
        initials,
        rules,
        comments,
    )
    .expect("quotient rebuild preserves validity"))
}

/// A single rewriting step of a reduction pipeline.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Pass {
    /// Drop states that are unreachable or accept nothing.
    RemoveUseless,
    /// Quotient by the kernel of the given preorder.
    Quotient { relation: RelationSpec },
    /// Prune by the order built from the given sides.
    Prune { u: RelationSpec, d: RelationSpec },
}

impl Pass {
    /// Stable label used in reports: `remove_useless`, `quotient(TOKEN)`,
    /// or `prune(TOKEN, TOKEN)`.
    pub fn label(&self) -> String {
        match self {
            Pass::RemoveUseless => "remove_useless".to_string(),
            Pass::Quotient { relation } => format!("quotient({})", relation),
            Pass::Prune { u, d } => format!("prune({}, {})", u, d),
        }
    }
}

/// Applies one pass, recomputing the relations it needs on the current
/// automaton. Prune passes are never forced here, so a combination the
/// catalog rejects is an error.
pub fn apply_pass(a: &TreeAutomaton, pass: &Pass) -> Result<TreeAutomaton, ReduceError> {
    match pass {
        Pass::RemoveUseless => Ok(a.remove_useless()),
        Pass::Quotient { relation } => {
            let rel = realize(a, relation)?;
            let kern = rel.kernel()?;
            quotient(a, &kern)
        }
        Pass::Prune { u, d } => {
            let u_rel = realize_base(a, u)?;
            let d_rel = realize_base(a, d)?;
            let order = build_prune_order(a, &u_rel, u, &d_rel, d, false)?;
            prune(a, &order)
        }
    }
}

/// Per-pass measurements for a reduction report.
#[derive(Debug, Clone)]
pub struct PassRecord {
    pub pass: String,
    pub states_before: usize,
    pub states_after: usize,
    pub transitions_before: usize,
    pub transitions_after: usize,
    pub millis: f64,
}

/// Runs the passes in order, appending one record per pass.
pub fn run_passes(
    a: &TreeAutomaton,
    passes: &[Pass],
    records: &mut Vec<PassRecord>,
) -> Result<TreeAutomaton, ReduceError> {
    let mut cur = a.clone();
    for pass in passes {
        let started = Instant::now();
        let (states_before, transitions_before) = counts(&cur);
        cur = apply_pass(&cur, pass)?;
        let (states_after, transitions_after) = counts(&cur);
        records.push(PassRecord {
            pass: pass.label(),
            states_before,
            states_after,
            transitions_before,
            transitions_after,
            millis: started.elapsed().as_secs_f64() * 1000.0,
        });
    }
    Ok(cur)
}

fn counts(a: &TreeAutomaton) -> (usize, usize) {
    (a.n_states(), a.rules().len())
}

/// The fixed pass sequence of one pipeline round at downward depth `x` and
/// upward depth `y`. Every prune combination in it is certified by the
/// catalog.
pub fn op_passes(x: u32, y: u32) -> Vec<Pass> {
    let dw = RelationSpec::dw_la(x);
    let up = RelationSpec::up_la(y, RelationSpec::identity());
    vec![
        Pass::RemoveUseless,
        Pass::Quotient {
            relation: dw.clone(),
        },
        Pass::Prune {
            u: RelationSpec::identity(),
            d: dw.clone().strict(),
        },
        Pass::RemoveUseless,
        Pass::Quotient {
            relation: up.clone(),
        },
        Pass::Prune {
            u: up.clone().strict(),
            d: RelationSpec::identity(),
        },
        Pass::Prune {
            u: RelationSpec::up_sim(RelationSpec::identity()).strict(),
            d: dw,
        },
        Pass::RemoveUseless,
        Pass::Quotient { relation: up },
        Pass::Prune {
            u: RelationSpec::up_la(y, RelationSpec::dw_sim()),
            d: RelationSpec::dw_sim().strict(),
        },
        Pass::RemoveUseless,
    ]
}

/// One pipeline round at the given depths.
pub fn op_xy(a: &TreeAutomaton, x: u32, y: u32) -> Result<TreeAutomaton, ReduceError> {
    run_passes(a, &op_passes(x, y), &mut Vec::new())
}

/// Iterates the depth-1 pipeline to exhaustion, then alternates it with
/// one round at the given depths until neither changes the automaton.
/// Progress is measured by state and transition counts: every pass is
/// nonincreasing in both, so unchanged counts mean an unchanged automaton.
pub fn heavy(a: &TreeAutomaton, x: u32, y: u32) -> Result<TreeAutomaton, ReduceError> {
    heavy_with(a, x, y, &mut Vec::new())
}

/// As [`heavy`], appending one record per executed pass.
pub fn heavy_with(
    a: &TreeAutomaton,
    x: u32,
    y: u32,
    records: &mut Vec<PassRecord>,
) -> Result<TreeAutomaton, ReduceError> {
    let base_passes = op_passes(1, 1);
    let deep_passes = op_passes(x, y);
    let mut cur = a.clone();
    loop {
        loop {
            let before = counts(&cur);
            cur = run_passes(&cur, &base_passes, records)?;
            if counts(&cur) == before {
                break;
            }
        }
        let before = counts(&cur);
        cur = run_passes(&cur, &deep_passes, records)?;
        if counts(&cur) == before {
            break;
        }
    }
    Ok(cur)
}

/// The plain-simulation reference reductions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaselineMethod {
    /// Remove useless states only.
    Ru,
    /// Additionally quotient by the downward simulation kernel.
    Ruq,
    /// Additionally prune transitions with strictly dominated targets.
    Ruqp,
}

/// The pass sequence of a baseline method.
pub fn baseline_passes(method: BaselineMethod) -> Vec<Pass> {
    let mut passes = vec![Pass::RemoveUseless];
    if matches!(method, BaselineMethod::Ruq | BaselineMethod::Ruqp) {
        passes.push(Pass::Quotient {
            relation: RelationSpec::dw_sim(),
        });
    }
    if method == BaselineMethod::Ruqp {
        passes.push(Pass::Prune {
            u: RelationSpec::identity(),
            d: RelationSpec::dw_sim().strict(),
        });
    }
    passes
}

/// Runs a baseline method.
pub fn baseline(a: &TreeAutomaton, method: BaselineMethod) -> Result<TreeAutomaton, ReduceError> {
    run_passes(a, &baseline_passes(method), &mut Vec::new())
}

/// A complete reduction method: a baseline or the iterated pipeline at
/// given depths.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Baseline(BaselineMethod),
    Heavy { x: u32, y: u32 },
}

impl Method {
    /// Token form: `ru`, `ruq`, `ruqp`, or `heavy:X:Y`.
    pub fn token(&self) -> String {
        match self {
            Method::Baseline(BaselineMethod::Ru) => "ru".to_string(),
            Method::Baseline(BaselineMethod::Ruq) => "ruq".to_string(),
            Method::Baseline(BaselineMethod::Ruqp) => "ruqp".to_string(),
            Method::Heavy { x, y } => format!("heavy:{}:{}", x, y),
        }
    }

    /// Parses the token form; depths must be at least 1.
    pub fn parse_token(text: &str) -> Result<Method, SpecError> {
        let bad = || SpecError::BadToken(text.to_string());
        match text {
            "ru" => Ok(Method::Baseline(BaselineMethod::Ru)),
            "ruq" => Ok(Method::Baseline(BaselineMethod::Ruq)),
            "ruqp" => Ok(Method::Baseline(BaselineMethod::Ruqp)),
            _ => {
                let rest = text.strip_prefix("heavy:").ok_or_else(bad)?;
                let (x, y) = rest.split_once(':').ok_or_else(bad)?;
                let x: u32 = x.parse().map_err(|_| bad())?;
                let y: u32 = y.parse().map_err(|_| bad())?;
                if x == 0 || y == 0 {
                    return Err(bad());
                }
                Ok(Method::Heavy { x, y })
            }
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.token())
    }
}

/// Summary of a reduction run: the method token, the pass-by-pass records,
/// and the overall size change.
#[derive(Debug, Clone)]
pub struct ReductionReport {
    pub method: String,
    pub states_before: usize,
    pub states_after: usize,
    pub transitions_before: usize,
    pub transitions_after: usize,
    pub passes: Vec<PassRecord>,
}

/// Reduces `a` with the given method.
pub fn reduce(a: &TreeAutomaton, method: Method) -> Result<TreeAutomaton, ReduceError> {
    Ok(reduce_with_report(a, method)?.0)
}

/// Reduces `a` and also returns the pass-by-pass report.
pub fn reduce_with_report(
    a: &TreeAutomaton,
    method: Method,
) -> Result<(TreeAutomaton, ReductionReport), ReduceError> {
    let mut passes = Vec::new();
    let out = match method {
        Method::Baseline(m) => run_passes(a, &baseline_passes(m), &mut passes)?,
        Method::Heavy { x, y } => heavy_with(a, x, y, &mut passes)?,
    };
    let (states_before, transitions_before) = counts(a);
    let (states_after, transitions_after) = counts(&out);
    let report = ReductionReport {
        method: method.token(),
        states_before,
        states_after,
        transitions_before,
        transitions_after,
        passes,
    };
    Ok((out, report))
}
