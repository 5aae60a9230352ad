//! Exclusion rules for individual triangular forms, checked against the sieve,
//! and the theorems that certify leaves without sieving.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::escalator::TargetSet;
use crate::quadform::Shift;
use crate::triangular::{self, RepTable, TriangularForm};

/// The rule catalog shipped with the crate.
pub const BUILTIN_CATALOG: &str = include_str!("../assets/rules.txt");

/// Moduli tried by [`table3_scan`] when looking for fully missing classes.
pub const DEFAULT_SCAN_MODULI: [u64; 7] = [3, 5, 8, 9, 25, 27, 81];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("catalog line {line}: {message}")]
    Catalog { line: usize, message: String },
    #[error(transparent)]
    Sieve(#[from] triangular::Error),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RuleKind {
    /// `v_p(N)` odd and `N / p^v_p(N) mod p ∈ residues`.
    OddPowerClass { prime: u64, residues: BTreeSet<u64> },
    /// `N` is a perfect square.
    SquareRequirement,
    /// `N mod modulus ∈ residues`.
    ResidueClassSet { modulus: u64, residues: BTreeSet<u64> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Claim {
    /// `n` is missed iff the rule matches.
    Exact,
    /// Every missed `n` matches the rule.
    NecessaryOnly,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExclusionRule {
    pub kind: RuleKind,
    pub shift: Shift,
    pub claim: Claim,
}

impl ExclusionRule {
    pub fn odd_power_class(shift: Shift, prime: u64, residues: impl IntoIterator<Item = u64>) -> Self {
        Self {
            kind: RuleKind::OddPowerClass { prime, residues: residues.into_iter().collect() },
            shift,
            claim: Claim::Exact,
        }
    }

    pub fn square(shift: Shift) -> Self {
        Self { kind: RuleKind::SquareRequirement, shift, claim: Claim::NecessaryOnly }
    }

    pub fn residue_classes(shift: Shift, modulus: u64, residues: impl IntoIterator<Item = u64>) -> Self {
        Self {
            kind: RuleKind::ResidueClassSet { modulus, residues: residues.into_iter().collect() },
            shift,
            claim: Claim::NecessaryOnly,
        }
    }

    pub fn with_claim(mut self, claim: Claim) -> Self {
        self.claim = claim;
        self
    }
}

fn join(set: &BTreeSet<u64>) -> String {
    set.iter().map(u64::to_string).collect::<Vec<_>>().join(",")
}

impl fmt::Display for ExclusionRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let claim = match self.claim {
            Claim::Exact => "exact",
            Claim::NecessaryOnly => "necessary",
        };
        match &self.kind {
            RuleKind::OddPowerClass { prime, residues } => {
                write!(f, "{};odd-power-class;p={prime} R={};{claim}", self.shift, join(residues))
            }
            RuleKind::SquareRequirement => write!(f, "{};square;-;{claim}", self.shift),
            RuleKind::ResidueClassSet { modulus, residues } => {
                write!(f, "{};residue-class;M={modulus} R={};{claim}", self.shift, join(residues))
            }
        }
    }
}

fn is_square(n: u128) -> bool {
    let r = triangular::isqrt_u128(n);
    r * r == n
}

/// Whether the rule's predicate holds at `shift(n)`.
pub fn rule_excluded(rule: &ExclusionRule, n: u64) -> bool {
    let value = rule.shift.multiplier as u128 * n as u128 + rule.shift.offset as u128;
    match &rule.kind {
        RuleKind::OddPowerClass { prime, residues } => {
            let p = *prime as u128;
            if value == 0 || p < 2 {
                return false;
            }
            let (mut rest, mut valuation) = (value, 0u32);
            while rest % p == 0 {
                rest /= p;
                valuation += 1;
            }
            valuation % 2 == 1 && residues.contains(&((rest % p) as u64))
        }
        RuleKind::SquareRequirement => is_square(value),
        RuleKind::ResidueClassSet { modulus, residues } => {
            *modulus > 0 && residues.contains(&((value % *modulus as u128) as u64))
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RuleVerification {
    /// Missed values the rule does not predict, followed by represented
    /// values it does predict.
    pub exact_violations: Vec<u64>,
    /// Missed values the rule does not predict.
    pub necessity_violations: Vec<u64>,
}

impl RuleVerification {
    pub fn passes(&self, claim: Claim) -> bool {
        match claim {
            Claim::Exact => self.exact_violations.is_empty(),
            Claim::NecessaryOnly => self.necessity_violations.is_empty(),
        }
    }
}

/// Compares the rule with the sieve of `form` over `0..=bound`.
pub fn verify_rule(form: &TriangularForm, rule: &ExclusionRule, bound: u64) -> Result<RuleVerification, Error> {
    Ok(verify_rule_on(&triangular::represented_up_to(form, bound)?, rule))
}

/// [`verify_rule`] over a precomputed table.
pub fn verify_rule_on(table: &RepTable, rule: &ExclusionRule) -> RuleVerification {
    let bound = table.bound();
    let mut out = RuleVerification::default();
    let mut overreach = Vec::new();
    for n in 0..=bound {
        match (table.get(n), rule_excluded(rule, n)) {
            (false, false) => out.necessity_violations.push(n),
            (true, true) => overreach.push(n),
            _ => {}
        }
    }
    out.exact_violations = out.necessity_violations.clone();
    out.exact_violations.extend(overreach);
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CatalogEntry {
    pub form: TriangularForm,
    pub rule: ExclusionRule,
    pub statement: String,
}

impl fmt::Display for CatalogEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let coeffs = self.form.coeffs().iter().map(u64::to_string).collect::<Vec<_>>().join(",");
        write!(f, "{coeffs};{};{}", self.rule, self.statement)
    }
}

fn parse_residues(text: &str) -> Option<BTreeSet<u64>> {
    text.split(',').map(|t| t.trim().parse().ok()).collect()
}

fn parse_params(text: &str, first: &str) -> Option<(u64, BTreeSet<u64>)> {
    let mut head = None;
    let mut residues = None;
    for token in text.split_whitespace() {
        let (key, value) = token.split_once('=')?;
        match key {
            k if k == first => head = Some(value.parse().ok()?),
            "R" => residues = Some(parse_residues(value)?),
            _ => return None,
        }
    }
    Some((head?, residues?))
}

/// Parses the `FORM;SHIFT;KIND;PARAMS;CLAIM;STATEMENT` catalog format. Blank
/// lines and `#` comments are skipped.
pub fn parse_catalog(text: &str) -> Result<Vec<CatalogEntry>, Error> {
    let mut entries = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |message: &str| Error::Catalog { line: i + 1, message: message.to_string() };
        let fields: Vec<&str> = line.splitn(6, ';').collect();
        let [form, shift, kind, params, claim, statement] = fields[..] else {
            return Err(err("expected six ';'-separated fields"));
        };
        let form: TriangularForm = form.parse().map_err(|_| err("bad form"))?;
        if form.is_empty() {
            return Err(err("empty form"));
        }
        let shift: Shift = shift.parse().map_err(|_| err("bad shift"))?;
        let claim = match claim.trim() {
            "exact" => Claim::Exact,
            "necessary" => Claim::NecessaryOnly,
            _ => return Err(err("claim must be exact or necessary")),
        };
        let kind = match kind.trim() {
            "odd-power-class" => {
                let (prime, residues) = parse_params(params, "p").ok_or_else(|| err("bad params"))?;
                RuleKind::OddPowerClass { prime, residues }
            }
            "residue-class" => {
                let (modulus, residues) = parse_params(params, "M").ok_or_else(|| err("bad params"))?;
                if modulus == 0 {
                    return Err(err("modulus must be positive"));
                }
                RuleKind::ResidueClassSet { modulus, residues }
            }
            "square" => RuleKind::SquareRequirement,
            _ => return Err(err("unknown kind")),
        };
        entries.push(CatalogEntry {
            form,
            rule: ExclusionRule { kind, shift, claim },
            statement: statement.trim().to_string(),
        });
    }
    Ok(entries)
}

pub fn builtin_catalog() -> Vec<CatalogEntry> {
    parse_catalog(BUILTIN_CATALOG).expect("built-in catalog parses")
}

/// Catalog entries for one form.
pub fn rules_for(form: &TriangularForm) -> Vec<CatalogEntry> {
    builtin_catalog().into_iter().filter(|e| &e.form == form).collect()
}

/// A theorem certifying that a form represents a whole target set.
#[derive(Debug, PartialEq, Eq)]
pub struct KnownLeafRule {
    pub id: &'static str,
    pub citation: &'static str,
}

/// Gauss (1796): every `n >= 0` is `T(x) + T(y) + T(z)`.
pub static GAUSS: KnownLeafRule = KnownLeafRule {
    id: "gauss",
    citation: "Gauss (1796): every non-negative integer is a sum of three triangular numbers",
};

/// Gauss scaled: `[c,c,c]` represents exactly `cℕ`.
pub static GAUSS_MULTIPLE: KnownLeafRule = KnownLeafRule {
    id: "gauss-multiple",
    citation: "Gauss (1796), scaled: c·T(x) + c·T(y) + c·T(z) takes every multiple of c",
};

/// Liouville (1862).
pub static LIOUVILLE: KnownLeafRule = KnownLeafRule {
    id: "liouville",
    citation: "Liouville (1862): for a <= b <= c, aT(x)+bT(y)+cT(z) represents every natural \
               number iff (a,b,c) is (1,1,1), (1,1,2), (1,1,4), (1,1,5), (1,2,2), (1,2,3) or (1,2,4)",
};

/// The 1-2-4-5-8 criterion for universality over ℕ.
pub static UNIVERSALITY: KnownLeafRule = KnownLeafRule {
    id: "universal-12458",
    citation: "a sum of triangular numbers represents every positive integer iff it represents \
               1, 2, 4, 5 and 8",
};

/// Ternary forms that represent every natural number.
pub const LIOUVILLE_TRIPLES: [[u64; 3]; 7] =
    [[1, 1, 1], [1, 1, 2], [1, 1, 4], [1, 1, 5], [1, 2, 2], [1, 2, 3], [1, 2, 4]];

/// The values that decide universality over ℕ.
pub const UNIVERSALITY_WITNESSES: [u64; 5] = [1, 2, 4, 5, 8];

fn contains_submultiset(form: &TriangularForm, triple: &[u64; 3]) -> bool {
    triple.iter().all(|&c| {
        let needed = triple.iter().filter(|&&t| t == c).count();
        form.multiplicity(c) >= needed
    })
}

/// A theorem proving that `form` represents all of `target`, if one applies.
pub fn known_leaf(form: &TriangularForm, target: &TargetSet) -> Option<&'static KnownLeafRule> {
    if form.is_empty() {
        return None;
    }
    if target.is_naturals()
        && UNIVERSALITY_WITNESSES
            .iter()
            .all(|&n| triangular::represents(form, n).unwrap_or(false))
    {
        return Some(&UNIVERSALITY);
    }
    if contains_submultiset(form, &[1, 1, 1]) {
        return Some(&GAUSS);
    }
    if LIOUVILLE_TRIPLES.iter().any(|t| contains_submultiset(form, t)) {
        return Some(&LIOUVILLE);
    }
    let mut coeffs = form.coeffs().to_vec();
    coeffs.dedup();
    if coeffs
        .iter()
        .any(|&c| form.multiplicity(c) >= 3 && target.within_multiples_of(c))
    {
        return Some(&GAUSS_MULTIPLE);
    }
    None
}

/// A residue class `n ≡ residue (mod modulus)` among the missed values.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassReport {
    pub modulus: u64,
    pub residue: u64,
    /// Every member of the class in `1..=bound` is missed.
    pub full: bool,
    /// Missed members of the class.
    pub missing: u64,
    /// Supplied by the caller rather than detected.
    pub supplied: bool,
}

#[derive(Debug, Clone, Default)]
pub struct ScanOptions {
    /// Classes `(modulus, residues)` the caller attributes missed values to.
    pub supplied: Vec<(u64, BTreeSet<u64>)>,
    /// Moduli searched for fully missed classes.
    pub moduli: Vec<u64>,
}

impl ScanOptions {
    pub fn with_default_moduli() -> Self {
        Self { supplied: Vec::new(), moduli: DEFAULT_SCAN_MODULI.to_vec() }
    }

    pub fn supply(mut self, modulus: u64, residues: impl IntoIterator<Item = u64>) -> Self {
        self.supplied.push((modulus, residues.into_iter().collect()));
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScanReport {
    pub form: TriangularForm,
    pub bound: u64,
    /// Every positive value `<= bound` the form misses.
    pub missing: Vec<u64>,
    pub classes: Vec<ClassReport>,
    /// Missed values outside every reported class.
    pub sporadics: Vec<u64>,
}

impl ScanReport {
    pub fn full_classes(&self) -> impl Iterator<Item = &ClassReport> {
        self.classes.iter().filter(|c| c.full)
    }
}

/// Splits the missed values of `form` up to `bound` into residue classes and
/// sporadic values. A detected class is reported only when all of its members
/// up to `bound` are missed and no coarser reported class already covers it.
pub fn table3_scan(form: &TriangularForm, bound: u64, options: &ScanOptions) -> Result<ScanReport, Error> {
    Ok(table3_scan_on(&triangular::represented_up_to(form, bound)?, options))
}

/// [`table3_scan`] over a precomputed table.
pub fn table3_scan_on(table: &RepTable, options: &ScanOptions) -> ScanReport {
    let bound = table.bound();
    let missing: Vec<u64> = table.missing().filter(|&n| n > 0).collect();

    let class_size = |m: u64, r: u64| -> u64 {
        // members of r mod m inside 1..=bound
        let first = if r == 0 { m } else { r };
        if first > bound { 0 } else { (bound - first) / m + 1 }
    };
    let tally = |m: u64| -> Vec<u64> {
        let mut counts = vec![0u64; m as usize];
        missing.iter().for_each(|&n| counts[(n % m) as usize] += 1);
        counts
    };

    let mut classes = Vec::new();
    for (m, residues) in &options.supplied {
        let counts = tally(*m);
        for &r in residues {
            let size = class_size(*m, r % m);
            let miss = counts[(r % m) as usize];
            classes.push(ClassReport {
                modulus: *m,
                residue: r % m,
                full: size > 0 && miss == size,
                missing: miss,
                supplied: true,
            });
        }
    }
    let mut moduli = options.moduli.clone();
    moduli.sort_unstable();
    moduli.dedup();
    for m in moduli.into_iter().filter(|&m| m > 1) {
        let counts = tally(m);
        for r in 0..m {
            let size = class_size(m, r);
            if size == 0 || counts[r as usize] != size {
                continue;
            }
            let covered = classes
                .iter()
                .any(|c: &ClassReport| (c.full || c.supplied) && m % c.modulus == 0 && r % c.modulus == c.residue);
            if !covered {
                classes.push(ClassReport { modulus: m, residue: r, full: true, missing: size, supplied: false });
            }
        }
    }
    let sporadics = missing
        .iter()
        .copied()
        .filter(|&n| !classes.iter().any(|c| (c.full || c.supplied) && n % c.modulus == c.residue))
        .collect();
    ScanReport { form: table.form().clone(), bound, missing, classes, sporadics }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn form(c: &[u64]) -> TriangularForm {
        TriangularForm::new(c.to_vec()).unwrap()
    }

    fn rule113() -> ExclusionRule {
        ExclusionRule::odd_power_class(Shift::new(8, 5), 3, [2])
    }

    #[test]
    fn odd_power_examples() {
        // 69 = 3·23, 23 ≡ 2 (mod 3)
        assert!(rule_excluded(&rule113(), 8));
        // 141 = 3·47
        assert!(rule_excluded(&rule113(), 17));
        // 45 = 3²·5
        assert!(!rule_excluded(&rule113(), 5));
        assert!(triangular::represents(&form(&[1, 1, 3]), 5).unwrap());
    }

    #[test]
    fn other_kinds() {
        let sq = ExclusionRule::square(Shift::new(8, 9));
        assert!(rule_excluded(&sq, 0) && rule_excluded(&sq, 2) && !rule_excluded(&sq, 1));
        let rc = ExclusionRule::residue_classes(Shift::IDENTITY, 9, [2, 8]);
        assert!(rule_excluded(&rc, 11) && rule_excluded(&rc, 17) && !rule_excluded(&rc, 9));
        let zero = ExclusionRule::odd_power_class(Shift::IDENTITY, 3, [1, 2]);
        assert!(!rule_excluded(&zero, 0));
    }

    #[test]
    fn verification_splits_violations() {
        // claims every n >= 1 that is 2 mod 3 is missed by [1,1,3]: wrong both ways
        let bogus = ExclusionRule::residue_classes(Shift::IDENTITY, 3, [2]).with_claim(Claim::Exact);
        let v = verify_rule(&form(&[1, 1, 3]), &bogus, 100).unwrap();
        assert!(!v.exact_violations.is_empty());
        assert!(!v.passes(Claim::Exact));
        let v = verify_rule(&form(&[1, 1, 3]), &rule113(), 2000).unwrap();
        assert!(v.passes(Claim::Exact), "{v:?}");
    }

    #[test]
    fn catalog_parses_and_round_trips() {
        let cat = builtin_catalog();
        assert_eq!(cat.len(), 5);
        assert_eq!(cat[0].form, form(&[1, 1, 3]));
        assert_eq!(cat[0].rule, rule113());
        let text: String = cat.iter().map(|e| format!("{e}\n")).collect();
        assert_eq!(parse_catalog(&text).unwrap(), cat);
        assert_eq!(rules_for(&form(&[1, 4, 4]))[0].rule.kind, RuleKind::SquareRequirement);
    }

    #[test]
    fn catalog_errors_carry_lines() {
        let bad = "# header\n1,1,3;8n+5;odd-power-class;p=3 R=2;exact;ok\n1,1;8n;cube;-;exact;x\n";
        assert_eq!(
            parse_catalog(bad),
            Err(Error::Catalog { line: 3, message: "unknown kind".into() })
        );
        assert!(parse_catalog("1,2;8n+1;square;-;maybe;x").is_err());
        assert!(parse_catalog("1,2;8n+1;square").is_err());
    }

    #[test]
    fn known_leaf_examples() {
        assert_eq!(known_leaf(&form(&[1, 2, 4]), &TargetSet::odd()), Some(&LIOUVILLE));
        assert_eq!(known_leaf(&form(&[1, 1, 3]), &TargetSet::odd()), None);
        assert_eq!(known_leaf(&form(&[1, 1, 2, 7]), &TargetSet::naturals()), Some(&UNIVERSALITY));
        assert_eq!(known_leaf(&form(&[1, 1, 3]), &TargetSet::naturals()), None);
        assert_eq!(known_leaf(&form(&[1, 1, 1, 9]), &TargetSet::odd()), Some(&GAUSS));
        assert_eq!(known_leaf(&form(&[1, 3, 3, 3]), &TargetSet::residues(3, [0])), Some(&GAUSS_MULTIPLE));
        assert_eq!(known_leaf(&form(&[3, 3, 3]), &TargetSet::odd()), None);
    }

    #[test]
    fn scan_small() {
        let r = table3_scan(&form(&[1, 1, 3]), 200, &ScanOptions::with_default_moduli()).unwrap();
        assert_eq!(&r.missing[..2], &[8, 17]);
        // a two-coefficient form misses whole classes, e.g. [2,2] misses every odd n
        let r = table3_scan(&form(&[2, 2]), 300, &ScanOptions { supplied: vec![], moduli: vec![2, 4] })
            .unwrap();
        assert!(r.full_classes().any(|c| c.modulus == 2 && c.residue == 1));
        assert!(!r.classes.iter().any(|c| c.modulus == 4 && c.residue % 2 == 1));
    }
}
