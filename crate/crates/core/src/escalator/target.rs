use std::collections::BTreeSet;
use std::fmt;

use crate::triangular::{self, word_count, TriangularForm};

/// The base description of a target set, before overlays.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SetKind {
    /// Positive integers whose residue mod `modulus` lies in `residues`.
    ResidueUnion { modulus: u64, residues: BTreeSet<u64> },
    /// A finite sorted list.
    ExplicitList(Vec<u64>),
    /// Positive integers represented by a triangular form.
    FormImage(TriangularForm),
}

/// A set `S` of positive integers: a base kind plus include/exclude overlays,
/// applied in that order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TargetSet {
    kind: SetKind,
    include: BTreeSet<u64>,
    exclude: BTreeSet<u64>,
}

impl TargetSet {
    pub fn new(kind: SetKind) -> Self {
        let kind = match kind {
            SetKind::ResidueUnion { modulus, residues } => {
                let modulus = modulus.max(1);
                SetKind::ResidueUnion {
                    modulus,
                    residues: residues.into_iter().map(|r| r % modulus).collect(),
                }
            }
            SetKind::ExplicitList(mut v) => {
                v.retain(|&n| n > 0);
                v.sort_unstable();
                v.dedup();
                SetKind::ExplicitList(v)
            }
            other => other,
        };
        Self { kind, include: BTreeSet::new(), exclude: BTreeSet::new() }
    }

    /// All positive integers.
    pub fn naturals() -> Self {
        Self::residues(1, [0])
    }

    /// All odd positive integers.
    pub fn odd() -> Self {
        Self::residues(2, [1])
    }

    pub fn residues(modulus: u64, residues: impl IntoIterator<Item = u64>) -> Self {
        Self::new(SetKind::ResidueUnion { modulus, residues: residues.into_iter().collect() })
    }

    pub fn list(values: impl IntoIterator<Item = u64>) -> Self {
        Self::new(SetKind::ExplicitList(values.into_iter().collect()))
    }

    pub fn form_image(form: TriangularForm) -> Self {
        Self::new(SetKind::FormImage(form))
    }

    pub fn with_include(mut self, values: impl IntoIterator<Item = u64>) -> Self {
        self.include.extend(values.into_iter().filter(|&n| n > 0));
        self
    }

    pub fn with_exclude(mut self, values: impl IntoIterator<Item = u64>) -> Self {
        self.exclude.extend(values);
        self
    }

    pub fn kind(&self) -> &SetKind {
        &self.kind
    }

    pub fn includes(&self) -> &BTreeSet<u64> {
        &self.include
    }

    pub fn excludes(&self) -> &BTreeSet<u64> {
        &self.exclude
    }

    fn base_contains(&self, n: u64) -> bool {
        match &self.kind {
            SetKind::ResidueUnion { modulus, residues } => residues.contains(&(n % modulus)),
            SetKind::ExplicitList(v) => v.binary_search(&n).is_ok(),
            SetKind::FormImage(g) => !g.is_empty() && triangular::represents(g, n).unwrap_or(false),
        }
    }

    /// Membership of `n`; `0` is never a member.
    pub fn contains(&self, n: u64) -> bool {
        n > 0 && !self.exclude.contains(&n) && (self.include.contains(&n) || self.base_contains(n))
    }

    /// Largest possible member when the set is finite.
    fn finite_ceiling(&self) -> Option<u64> {
        let top_include = self.include.iter().next_back().copied().unwrap_or(0);
        match &self.kind {
            SetKind::ExplicitList(v) => Some(v.last().copied().unwrap_or(0).max(top_include)),
            SetKind::ResidueUnion { residues, .. } if residues.is_empty() => Some(top_include),
            SetKind::FormImage(g) if g.is_empty() => Some(top_include),
            _ => None,
        }
    }

    /// Least member `>= n`, or `None` once a finite set is exhausted.
    pub fn next_element(&self, n: u64) -> Option<u64> {
        let ceiling = self.finite_ceiling();
        let mut m = n.max(1);
        loop {
            if ceiling.is_some_and(|c| m > c) {
                return None;
            }
            if self.contains(m) {
                return Some(m);
            }
            m = m.checked_add(1)?;
        }
    }

    /// Ascending members in `1..=bound`.
    pub fn members_up_to(&self, bound: u64) -> impl Iterator<Item = u64> + '_ {
        std::iter::successors(self.next_element(1), move |&m| self.next_element(m + 1))
            .take_while(move |&m| m <= bound)
    }

    /// Membership bitmap over `0..=bound` in the packed layout of
    /// [`triangular::RepTable`].
    pub fn membership_words(&self, bound: u64) -> Result<Vec<u64>, triangular::Error> {
        let mut words = match &self.kind {
            SetKind::FormImage(g) if !g.is_empty() => {
                triangular::represented_up_to(g, bound)?.words().to_vec()
            }
            _ => {
                let mut words = vec![0u64; word_count(bound)];
                let mut set = |n: u64| words[(n / 64) as usize] |= 1 << (n % 64);
                match &self.kind {
                    SetKind::ResidueUnion { modulus, residues } => {
                        for &r in residues {
                            let mut n = r;
                            while n <= bound {
                                set(n);
                                n += modulus;
                            }
                        }
                    }
                    SetKind::ExplicitList(v) => {
                        v.iter().filter(|&&n| n <= bound).for_each(|&n| set(n));
                    }
                    SetKind::FormImage(_) => {}
                }
                words
            }
        };
        for &n in self.include.iter().filter(|&&n| n <= bound) {
            words[(n / 64) as usize] |= 1 << (n % 64);
        }
        for &n in self.exclude.iter().filter(|&&n| n <= bound) {
            words[(n / 64) as usize] &= !(1 << (n % 64));
        }
        words[0] &= !1;
        Ok(words)
    }

    /// Whether the set is every positive integer.
    pub fn is_naturals(&self) -> bool {
        self.exclude.is_empty()
            && match &self.kind {
                SetKind::ResidueUnion { modulus, residues } => residues.len() as u64 == *modulus,
                SetKind::FormImage(_) | SetKind::ExplicitList(_) => false,
            }
    }

    /// Whether every member is provably a multiple of `c`.
    pub fn within_multiples_of(&self, c: u64) -> bool {
        if c == 0 || self.include.iter().any(|n| n % c != 0) {
            return false;
        }
        match &self.kind {
            SetKind::ResidueUnion { modulus, residues } => {
                modulus % c == 0 && residues.iter().all(|r| r % c == 0)
            }
            SetKind::ExplicitList(v) => v.iter().all(|n| n % c == 0),
            SetKind::FormImage(g) => !g.is_empty() && g.coeffs().iter().all(|b| b % c == 0),
        }
    }

    /// Sets whose truant search may wander arbitrarily far: finite sets and
    /// images of forms in one or two variables have density zero.
    pub fn may_have_density_zero(&self) -> bool {
        match &self.kind {
            SetKind::ResidueUnion { residues, .. } => residues.is_empty(),
            SetKind::ExplicitList(_) => true,
            SetKind::FormImage(g) => g.len() <= 2,
        }
    }
}

impl fmt::Display for TargetSet {
    /// The set-spec text that parses back to this set.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |it: &mut dyn Iterator<Item = &u64>| {
            it.map(u64::to_string).collect::<Vec<_>>().join(",")
        };
        match &self.kind {
            SetKind::ResidueUnion { modulus: 1, residues } if residues.contains(&0) => {
                write!(f, "nat")?
            }
            SetKind::ResidueUnion { modulus: 2, residues }
                if residues.len() == 1 && residues.contains(&1) =>
            {
                write!(f, "odd")?
            }
            SetKind::ResidueUnion { modulus, residues } => {
                write!(f, "mod:{modulus}:{}", join(&mut residues.iter()))?
            }
            SetKind::ExplicitList(v) => write!(f, "list:{}", join(&mut v.iter()))?,
            SetKind::FormImage(g) => write!(f, "form:{}", join(&mut g.coeffs().iter()))?,
        }
        if !self.include.is_empty() {
            write!(f, "+include:{}", join(&mut self.include.iter()))?;
        }
        if !self.exclude.is_empty() {
            write!(f, "+exclude:{}", join(&mut self.exclude.iter()))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn membership_and_traversal() {
        let odd = TargetSet::odd();
        assert!(odd.contains(1) && !odd.contains(2) && !odd.contains(0));
        assert_eq!(odd.next_element(2), Some(3));
        assert_eq!(odd.members_up_to(9).collect::<Vec<_>>(), vec![1, 3, 5, 7, 9]);

        let list = TargetSet::list([9, 3, 3, 0]);
        assert_eq!(list.kind(), &SetKind::ExplicitList(vec![3, 9]));
        assert_eq!(list.next_element(4), Some(9));
        assert_eq!(list.next_element(10), None);

        let img = TargetSet::form_image("2,3,4".parse().unwrap());
        let missing: Vec<u64> = (1..=89).filter(|&n| !img.contains(n)).collect();
        assert_eq!(missing, vec![1, 8, 31]);
    }

    #[test]
    fn overlays_apply_after_kind() {
        let s = TargetSet::odd().with_include([4]).with_exclude([5, 4]);
        assert!(!s.contains(4) && !s.contains(5) && s.contains(7));
        let s = TargetSet::residues(3, []).with_include([6]);
        assert_eq!(s.members_up_to(100).collect::<Vec<_>>(), vec![6]);
        assert_eq!(s.next_element(7), None);
    }

    #[test]
    fn bitmap_matches_predicate() {
        let sets = [
            TargetSet::naturals(),
            TargetSet::odd().with_exclude([9]),
            TargetSet::residues(9, [2, 8]).with_include([1]),
            TargetSet::list([1, 64, 65, 200]),
            TargetSet::form_image("1,5,6".parse().unwrap()).with_exclude([3]),
        ];
        for s in &sets {
            let words = s.membership_words(300).unwrap();
            for n in 0..=300u64 {
                assert_eq!(words[(n / 64) as usize] >> (n % 64) & 1 == 1, s.contains(n), "{s} {n}");
            }
        }
    }

    #[test]
    fn structural_predicates() {
        assert!(TargetSet::naturals().is_naturals());
        assert!(TargetSet::residues(3, [0, 1, 2]).is_naturals());
        assert!(!TargetSet::odd().is_naturals());
        assert!(TargetSet::residues(6, [0, 3]).within_multiples_of(3));
        assert!(!TargetSet::odd().within_multiples_of(3));
        assert!(TargetSet::form_image("4,8".parse().unwrap()).within_multiples_of(4));
        assert!(TargetSet::list([1, 2]).may_have_density_zero());
        assert!(!TargetSet::odd().may_have_density_zero());
    }

    #[test]
    fn display_round_trips_through_text() {
        assert_eq!(TargetSet::odd().to_string(), "odd");
        assert_eq!(TargetSet::naturals().to_string(), "nat");
        assert_eq!(
            TargetSet::residues(9, [8, 2]).with_exclude([2]).to_string(),
            "mod:9:2,8+exclude:2"
        );
    }
}
