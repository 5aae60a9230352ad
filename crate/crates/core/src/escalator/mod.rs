//! Truant search and escalation trees.
//!
//! Starting from the empty form, every node is assigned its truant: the least
//! member of the target set it fails to represent. A node with truant `s` is
//! escalated by appending each coefficient `c` with `last <= c <= s`, skipping
//! values already used three times (`[c,c,c]` already represents `cℕ`). Nodes
//! with no truant are leaves. The set of all truants is `S_0`: a form
//! represents all of `S` iff it represents `S_0`.
//!
//! Leaves are only ever certified up to a bound, or by a cited theorem from
//! [`crate::rules`]. Nothing here proves a leaf unconditionally.

mod target;

use std::collections::BTreeSet;
use std::sync::Arc;

use rayon::prelude::*;
use thiserror::Error;

pub use target::{SetKind, TargetSet};

use crate::rules::{self, KnownLeafRule};
use crate::triangular::{self, RepTable, TriangularForm};

/// Most witness coefficients [`witness_form`] will build.
pub const MAX_WITNESS_COEFFS: u64 = 10_000_000;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid tree configuration: {0}")]
    InvalidConfig(String),
    #[error(
        "{form} first misses {element}, above the truant bound {truant_bound} but within the \
         leaf bound {leaf_bound}; raise the truant bound"
    )]
    TruantBeyondBound { form: TriangularForm, element: u64, truant_bound: u64, leaf_bound: u64 },
    #[error("tree exceeded {limit} nodes")]
    NodeBudget { limit: usize, partial: Box<EscalationTree> },
    #[error("witness for truant {truant} needs {coeffs} coefficients")]
    WitnessTooLarge { truant: u64, coeffs: u64 },
    #[error(transparent)]
    Sieve(#[from] triangular::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeStatus {
    /// Least member of `S` the form misses.
    Truant(u64),
    /// Represents every member of `S` up to `verified_bound`.
    ProvisionalLeaf { verified_bound: u64 },
    /// Represents all of `S` by a cited theorem.
    KnownLeaf { rule: &'static KnownLeafRule },
    /// Not yet examined; only found in the partial tree of a budget error.
    Pending,
}

impl NodeStatus {
    pub fn truant(&self) -> Option<u64> {
        match self {
            NodeStatus::Truant(s) => Some(*s),
            _ => None,
        }
    }

    pub fn is_leaf(&self) -> bool {
        matches!(self, NodeStatus::ProvisionalLeaf { .. } | NodeStatus::KnownLeaf { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EscalationNode {
    pub form: TriangularForm,
    pub status: NodeStatus,
    /// Ascending in the appended coefficient; empty unless the status is a truant.
    pub children: Vec<EscalationNode>,
}

impl EscalationNode {
    /// Pre-order walk, which is lexicographic order of coefficient lists.
    pub fn iter(&self) -> impl Iterator<Item = &EscalationNode> {
        let mut stack = vec![self];
        std::iter::from_fn(move || {
            let node = stack.pop()?;
            stack.extend(node.children.iter().rev());
            Some(node)
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TreeConfig {
    /// Bound up to which leaves are verified.
    pub leaf_bound: u64,
    /// Truants are searched for up to this bound.
    pub truant_bound: u64,
    /// Consult the known-leaf theorems before sieving.
    pub use_known_rules: bool,
    pub max_nodes: usize,
}

impl Default for TreeConfig {
    fn default() -> Self {
        Self { leaf_bound: 200_000, truant_bound: 100_000, use_known_rules: true, max_nodes: 1_000_000 }
    }
}

impl TreeConfig {
    pub fn new(truant_bound: u64, leaf_bound: u64) -> Self {
        Self { truant_bound, leaf_bound, ..Self::default() }
    }

    fn validate(&self) -> Result<(), Error> {
        if self.truant_bound == 0 {
            return Err(Error::InvalidConfig("truant bound must be positive".into()));
        }
        if self.leaf_bound < self.truant_bound {
            return Err(Error::InvalidConfig(format!(
                "leaf bound {} is below the truant bound {}",
                self.leaf_bound, self.truant_bound
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EscalationTree {
    pub target: TargetSet,
    pub config: TreeConfig,
    pub root: EscalationNode,
    /// Every truant in the tree.
    pub s0: BTreeSet<u64>,
    pub warnings: Vec<String>,
}

impl EscalationTree {
    pub fn nodes(&self) -> impl Iterator<Item = &EscalationNode> {
        self.root.iter()
    }

    pub fn node_count(&self) -> usize {
        self.nodes().count()
    }

    pub fn find(&self, form: &TriangularForm) -> Option<&EscalationNode> {
        self.nodes().find(|n| &n.form == form)
    }

    pub fn truant_nodes(&self) -> impl Iterator<Item = &EscalationNode> {
        self.nodes().filter(|n| n.status.truant().is_some())
    }

    /// Whether every node was examined and every truant node fully expanded.
    pub fn is_complete(&self) -> bool {
        self.nodes().all(|n| match n.status {
            NodeStatus::Pending => false,
            NodeStatus::Truant(_) => {
                let kids: Vec<_> = n.children.iter().map(|c| c.form.clone()).collect();
                kids == children(n)
            }
            _ => n.children.is_empty(),
        })
    }
}

fn table_for(form: &TriangularForm, bound: u64) -> Result<RepTable, Error> {
    if form.is_empty() {
        Ok(RepTable::trivial(bound))
    } else {
        Ok(triangular::represented_up_to(form, bound)?)
    }
}

/// Least `s ∈ S` with `s <= bound` not represented by `form` (the empty form
/// represents only 0, so its answer is `min S`).
pub fn smallest_missing(
    form: &TriangularForm,
    target: &TargetSet,
    bound: u64,
) -> Result<Option<u64>, Error> {
    let table = table_for(form, bound)?;
    Ok(table.first_unrepresented_in(&target.membership_words(bound)?))
}

/// Coefficients that may follow a node with truant `s`: `last <= c <= s`, at
/// most three copies of any value.
pub fn child_forms(form: &TriangularForm, truant: u64) -> Vec<TriangularForm> {
    let start = form.last().unwrap_or(1).max(1);
    (start..=truant)
        .filter(|&c| form.multiplicity(c) < 3)
        .map(|c| form.with_coefficient(c).expect("c is positive"))
        .collect()
}

/// The child forms of a truant node; leaves have none.
pub fn children(node: &EscalationNode) -> Vec<TriangularForm> {
    match node.status {
        NodeStatus::Truant(s) => child_forms(&node.form, s),
        _ => Vec::new(),
    }
}

struct Slot {
    form: TriangularForm,
    status: NodeStatus,
    children: Vec<usize>,
}

struct Pending {
    slot: usize,
    /// Table of the parent, and the coefficient appended to it.
    parent: Arc<RepTable>,
    appended: Option<u64>,
}

enum Outcome {
    Known(&'static KnownLeafRule),
    Leaf,
    Truant(u64, Arc<RepTable>),
}

fn examine(
    form: &TriangularForm,
    pending: &Pending,
    members: &[u64],
    target: &TargetSet,
    config: &TreeConfig,
) -> Result<Outcome, Error> {
    if config.use_known_rules && !form.is_empty() {
        if let Some(rule) = rules::known_leaf(form, target) {
            return Ok(Outcome::Known(rule));
        }
    }
    let table = match pending.appended {
        Some(c) => Arc::new(pending.parent.extend(c)?),
        None => Arc::clone(&pending.parent),
    };
    match table.first_unrepresented_in(members) {
        None => Ok(Outcome::Leaf),
        Some(s) if s <= config.truant_bound => Ok(Outcome::Truant(s, table)),
        Some(element) => Err(Error::TruantBeyondBound {
            form: form.clone(),
            element,
            truant_bound: config.truant_bound,
            leaf_bound: config.leaf_bound,
        }),
    }
}

fn assemble(slots: &[Slot], at: usize) -> EscalationNode {
    let slot = &slots[at];
    EscalationNode {
        form: slot.form.clone(),
        status: slot.status,
        children: slot.children.iter().map(|&c| assemble(slots, c)).collect(),
    }
}

fn finish(target: &TargetSet, config: &TreeConfig, slots: &[Slot], warnings: Vec<String>) -> EscalationTree {
    let root = assemble(slots, 0);
    let s0 = root.iter().filter_map(|n| n.status.truant()).collect();
    EscalationTree { target: target.clone(), config: *config, root, s0, warnings }
}

/// Breadth-first escalation from the empty form. Nodes of one depth are
/// examined in parallel; the result does not depend on scheduling.
pub fn build_tree(target: &TargetSet, config: &TreeConfig) -> Result<EscalationTree, Error> {
    config.validate()?;
    let mut warnings = Vec::new();
    if target.may_have_density_zero() {
        warnings.push(format!(
            "target {target} may have density zero; truant search relies on the configured bounds"
        ));
    }
    let members = target.membership_words(config.leaf_bound)?;
    let mut slots = vec![Slot { form: TriangularForm::empty(), status: NodeStatus::Pending, children: vec![] }];
    let mut frontier = vec![Pending {
        slot: 0,
        parent: Arc::new(RepTable::trivial(config.leaf_bound)),
        appended: None,
    }];
    while !frontier.is_empty() {
        let outcomes = frontier
            .par_iter()
            .map(|p| examine(&slots[p.slot].form, p, &members, target, config))
            .collect::<Vec<_>>();
        let mut next = Vec::new();
        for (p, outcome) in frontier.iter().zip(outcomes) {
            let status = match outcome? {
                Outcome::Known(rule) => NodeStatus::KnownLeaf { rule },
                Outcome::Leaf => NodeStatus::ProvisionalLeaf { verified_bound: config.leaf_bound },
                Outcome::Truant(s, table) => {
                    for child in child_forms(&slots[p.slot].form, s) {
                        let appended = child.last();
                        let id = slots.len();
                        slots.push(Slot { form: child, status: NodeStatus::Pending, children: vec![] });
                        slots[p.slot].children.push(id);
                        next.push(Pending { slot: id, parent: Arc::clone(&table), appended });
                    }
                    NodeStatus::Truant(s)
                }
            };
            slots[p.slot].status = status;
        }
        if slots.len() > config.max_nodes {
            let partial = finish(target, config, &slots, warnings);
            return Err(Error::NodeBudget { limit: config.max_nodes, partial: Box::new(partial) });
        }
        frontier = next;
    }
    Ok(finish(target, config, &slots, warnings))
}

/// The form `b + [s+1]·3 + [s+2]·3 + … + [(s+1)(s+2)−1]·3` together with every
/// `n <= check_bound` where it breaks "represents every member of `S` except `s`,
/// and not `s`".
pub fn witness_form(
    form: &TriangularForm,
    truant: u64,
    target: &TargetSet,
    check_bound: u64,
) -> Result<(TriangularForm, Vec<u64>), Error> {
    let top = (truant + 1)
        .checked_mul(truant + 2)
        .map(|v| v - 1)
        .ok_or(triangular::Error::Overflow("witness range"))?;
    let coeffs = 3 * (top - truant);
    if coeffs > MAX_WITNESS_COEFFS {
        return Err(Error::WitnessTooLarge { truant, coeffs });
    }
    let mut all = form.coeffs().to_vec();
    for c in truant + 1..=top {
        all.extend([c; 3]);
    }
    let witness = TriangularForm::from_unsorted(all)?;

    let mut table = table_for(form, check_bound)?;
    // coefficients above the bound only ever contribute 0
    for c in (truant + 1..=top.min(check_bound)).rev() {
        for _ in 0..3 {
            table = table.extend(c)?;
        }
    }
    let violations = (1..=check_bound)
        .filter(|&n| {
            let rep = table.get(n);
            if n == truant {
                rep
            } else {
                target.contains(n) && !rep
            }
        })
        .collect();
    Ok((witness, violations))
}

/// `(parent form, c)` for every child `parent + [c]` that keeps its parent's
/// truant, i.e. appending `c` brings no new truant into `S_0`.
pub fn stuck_report(tree: &EscalationTree) -> Vec<(TriangularForm, u64)> {
    tree.nodes()
        .filter_map(|n| n.status.truant().map(|s| (n, s)))
        .flat_map(|(n, s)| {
            n.children
                .iter()
                .filter(move |child| child.status.truant() == Some(s))
                .map(move |child| {
                    let appended = child.form.coeffs()[child.form.len() - 1];
                    (n.form.clone(), appended)
                })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn form(c: &[u64]) -> TriangularForm {
        TriangularForm::new(c.to_vec()).unwrap()
    }

    #[test]
    fn smallest_missing_examples() {
        // [1] hits 0,1,3,6,10,15,21,28,36,45,...; odd misses begin 5
        assert_eq!(smallest_missing(&form(&[1]), &TargetSet::odd(), 100).unwrap(), Some(5));
        assert_eq!(smallest_missing(&form(&[1, 1, 3]), &TargetSet::odd(), 100).unwrap(), Some(17));
        let image = TargetSet::form_image(form(&[2, 3, 4]));
        assert_eq!(smallest_missing(&form(&[2, 2, 3]), &image, 100).unwrap(), Some(10));
        assert_eq!(smallest_missing(&TriangularForm::empty(), &TargetSet::odd(), 10).unwrap(), Some(1));
        assert_eq!(smallest_missing(&form(&[1, 1, 1]), &TargetSet::naturals(), 1000).unwrap(), None);
        assert_eq!(smallest_missing(&form(&[1]), &TargetSet::list([]), 100).unwrap(), None);
    }

    #[test]
    fn children_examples() {
        let kids = child_forms(&form(&[1]), 5);
        let expected: Vec<_> = (1..=5).map(|c| form(&[1, c])).collect();
        assert_eq!(kids, expected);
        assert!(child_forms(&form(&[1, 1, 1]), 9).iter().all(|f| f.multiplicity(1) == 3));
        assert!(child_forms(&form(&[1, 1, 1]), 1).is_empty());
        assert_eq!(child_forms(&TriangularForm::empty(), 2), vec![form(&[1]), form(&[2])]);
        let leaf = EscalationNode {
            form: form(&[1, 2, 3]),
            status: NodeStatus::ProvisionalLeaf { verified_bound: 10 },
            children: vec![],
        };
        assert!(children(&leaf).is_empty());
    }

    #[test]
    fn small_tree_for_naturals() {
        let mut config = TreeConfig::new(1000, 5000);
        config.use_known_rules = false;
        let tree = build_tree(&TargetSet::naturals(), &config).unwrap();
        assert_eq!(tree.s0.iter().copied().collect::<Vec<_>>(), vec![1, 2, 4, 5, 8]);
        for node in tree.truant_nodes() {
            let s = node.status.truant().unwrap();
            assert_eq!(children(node).len(), node.children.len());
            assert_eq!(smallest_missing(&node.form, &tree.target, 5000).unwrap(), Some(s));
        }
        assert!(tree.is_complete());
        let forms: Vec<_> = tree.nodes().map(|n| n.form.clone()).collect();
        let mut sorted = forms.clone();
        sorted.sort();
        assert_eq!(forms, sorted, "pre-order is lexicographic");
    }

    #[test]
    fn config_is_validated() {
        assert!(matches!(
            build_tree(&TargetSet::odd(), &TreeConfig::new(100, 10)),
            Err(Error::InvalidConfig(_))
        ));
    }

    #[test]
    fn truant_beyond_bound_is_an_error() {
        // 7000 is not triangular, so [1] first misses it
        let err = build_tree(&TargetSet::list([1, 7000]), &TreeConfig::new(10, 8000));
        assert!(matches!(err, Err(Error::TruantBeyondBound { element: 7000, .. })), "{err:?}");
    }

    #[test]
    fn node_budget_returns_partial_tree() {
        let mut config = TreeConfig::new(10_000, 20_000);
        config.max_nodes = 5;
        match build_tree(&TargetSet::odd(), &config) {
            Err(Error::NodeBudget { partial, limit: 5 }) => {
                assert!(partial.nodes().any(|n| n.status == NodeStatus::Pending));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn witness_examples() {
        let (w, v) = witness_form(&form(&[1]), 5, &TargetSet::odd(), 2000).unwrap();
        let mut expected = vec![1];
        for c in 6..=41 {
            expected.extend([c; 3]);
        }
        assert_eq!(w.coeffs(), &expected[..]);
        assert!(v.is_empty(), "{v:?}");
        assert!(!triangular::represents(&w, 5).unwrap());
        let (w, v) = witness_form(&form(&[1, 2]), 4, &TargetSet::naturals(), 2000).unwrap();
        assert!(v.is_empty(), "{v:?}");
        assert!(!triangular::represents(&w, 4).unwrap());
        // a non-truant yields violations
        let (_, v) = witness_form(&form(&[1, 2]), 5, &TargetSet::naturals(), 200).unwrap();
        // 4 is missed, and 5 = T(2) + 2T(1) is not a truant
        assert_eq!(v, vec![4, 5]);
    }

    #[test]
    fn stuck_report_for_naturals() {
        let tree = build_tree(&TargetSet::naturals(), &TreeConfig::new(1000, 5000)).unwrap();
        let stuck = stuck_report(&tree);
        assert!(stuck.iter().all(|(p, _)| p != &form(&[1, 2])), "{stuck:?}");
        let node = tree.find(&form(&[1, 2])).unwrap();
        assert!(node.children.iter().all(|c| c.status.is_leaf()));
    }

    #[test]
    fn density_zero_warning() {
        let tree = build_tree(&TargetSet::list([1, 2, 3]), &TreeConfig::new(10, 10)).unwrap();
        assert_eq!(tree.warnings.len(), 1);
        assert_eq!(tree.s0.iter().copied().collect::<Vec<_>>(), vec![1, 2]);
    }
}
