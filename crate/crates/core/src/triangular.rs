//! Triangular numbers, triangular forms `f_b(x) = Σ b_i T(x_i)`, exact
//! representation counting and the layered representability sieve.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use thiserror::Error;

/// Largest table (in bits) `represented_up_to` will allocate by default: 4 GiB.
pub const DEFAULT_BUDGET_BITS: u64 = 1 << 35;

/// Word count above which a fold layer is split across threads.
const PARALLEL_WORDS: usize = 1 << 14;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("integer overflow computing {0}")]
    Overflow(&'static str),
    #[error("coefficient at position {index} is zero")]
    ZeroCoefficient { index: usize },
    #[error("coefficients must be non-decreasing (position {index})")]
    NotSorted { index: usize },
    #[error("operation requires a non-empty form")]
    EmptyForm,
    #[error("table of {requested} bits exceeds the memory budget of {budget} bits")]
    BudgetExceeded { requested: u64, budget: u64 },
    #[error("invalid coefficient list {0:?}")]
    Parse(String),
}

/// `T(x) = x(x+1)/2`, with overflow reported instead of wrapping.
pub fn triangular(x: u64) -> Result<u64, Error> {
    if x == u64::MAX {
        return Err(Error::Overflow("T(x)"));
    }
    let (even, odd) = if x.is_multiple_of(2) { (x / 2, x + 1) } else { (x.div_ceil(2), x) };
    even.checked_mul(odd).ok_or(Error::Overflow("T(x)"))
}

/// Returns `Some(x)` when `t = T(x)`.
pub fn triangular_root(t: u64) -> Option<u64> {
    // 8t+1 must be an odd square (2x+1)^2
    let disc = (t as u128) * 8 + 1;
    let s = isqrt_u128(disc);
    if s * s == disc {
        Some(((s - 1) / 2) as u64)
    } else {
        None
    }
}

/// Largest `x` with `T(x) <= t`.
pub fn triangular_floor_root(t: u64) -> u64 {
    let disc = (t as u128) * 8 + 1;
    ((isqrt_u128(disc) - 1) / 2) as u64
}

pub(crate) fn isqrt_u128(n: u128) -> u128 {
    if n < 2 {
        return n;
    }
    let mut x = (n as f64).sqrt() as u128;
    while x * x > n {
        x -= 1;
    }
    while (x + 1) * (x + 1) <= n {
        x += 1;
    }
    x
}

pub(crate) fn isqrt(n: u64) -> u64 {
    isqrt_u128(n as u128) as u64
}

/// A sum of triangular numbers, identified with its sorted coefficient list.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct TriangularForm {
    coeffs: Vec<u64>,
}

impl TriangularForm {
    /// Builds a form from a non-decreasing list of positive coefficients.
    pub fn new(coeffs: Vec<u64>) -> Result<Self, Error> {
        for (index, &c) in coeffs.iter().enumerate() {
            if c == 0 {
                return Err(Error::ZeroCoefficient { index });
            }
            if index > 0 && coeffs[index - 1] > c {
                return Err(Error::NotSorted { index });
            }
        }
        Ok(Self { coeffs })
    }

    /// Sorts the coefficients first; zero coefficients are still rejected.
    pub fn from_unsorted(mut coeffs: Vec<u64>) -> Result<Self, Error> {
        coeffs.sort_unstable();
        Self::new(coeffs)
    }

    /// The empty form, root of every escalation tree.
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn coeffs(&self) -> &[u64] {
        &self.coeffs
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn last(&self) -> Option<u64> {
        self.coeffs.last().copied()
    }

    /// `Σ b_i`, the offset of the odd-square shift `n ↦ 8n + Σ b_i`.
    pub fn coeff_sum(&self) -> u64 {
        self.coeffs.iter().sum()
    }

    pub fn multiplicity(&self, c: u64) -> usize {
        self.coeffs.iter().filter(|&&b| b == c).count()
    }

    /// Inserts `c` keeping the list sorted.
    pub fn with_coefficient(&self, c: u64) -> Result<Self, Error> {
        if c == 0 {
            return Err(Error::ZeroCoefficient { index: self.len() });
        }
        let mut coeffs = self.coeffs.clone();
        let at = coeffs.partition_point(|&b| b <= c);
        coeffs.insert(at, c);
        Ok(Self { coeffs })
    }

    /// Multiplies every coefficient by `c`.
    pub fn scaled(&self, c: u64) -> Result<Self, Error> {
        let coeffs = self
            .coeffs
            .iter()
            .map(|&b| b.checked_mul(c).ok_or(Error::Overflow("scaled coefficient")))
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(coeffs)
    }

    /// Evaluates `Σ b_i T(x_i)`.
    pub fn evaluate(&self, xs: &[u64]) -> Result<u64, Error> {
        assert_eq!(xs.len(), self.len(), "tuple length must match the form");
        self.coeffs.iter().zip(xs).try_fold(0u64, |acc, (&b, &x)| {
            let term = triangular(x)?
                .checked_mul(b)
                .ok_or(Error::Overflow("b * T(x)"))?;
            acc.checked_add(term).ok_or(Error::Overflow("form value"))
        })
    }

    fn require_nonempty(&self) -> Result<(), Error> {
        if self.is_empty() {
            Err(Error::EmptyForm)
        } else {
            Ok(())
        }
    }
}

impl fmt::Display for TriangularForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, c) in self.coeffs.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, "]")
    }
}

impl FromStr for TriangularForm {
    type Err = Error;

    /// Accepts `1,1,3` or `[1,1,3]`; the list is sorted before validation.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let body = s.trim().trim_start_matches('[').trim_end_matches(']');
        if body.trim().is_empty() {
            return Ok(Self::empty());
        }
        let coeffs = body
            .split(',')
            .map(|t| t.trim().parse::<u64>().map_err(|_| Error::Parse(s.to_string())))
            .collect::<Result<Vec<_>, _>>()?;
        Self::from_unsorted(coeffs)
    }
}

/// Number of ordered tuples `x ∈ ℕ^k` with `Σ b_i T(x_i) = n`.
pub fn count_reps(form: &TriangularForm, n: u64) -> Result<u64, Error> {
    form.require_nonempty()?;
    Ok(count_from(form.coeffs(), n))
}

fn count_from(coeffs: &[u64], n: u64) -> u64 {
    match coeffs {
        [] => (n == 0) as u64,
        [b] => (n.is_multiple_of(*b) && triangular_root(n / b).is_some()) as u64,
        [b, rest @ ..] => {
            let mut total = 0;
            let mut x = 0u64;
            loop {
                let used = b * (x * (x + 1) / 2);
                if used > n {
                    break;
                }
                total += count_from(rest, n - used);
                x += 1;
            }
            total
        }
    }
}

/// Whether some tuple attains `n`. Stops at the first solution.
pub fn represents(form: &TriangularForm, n: u64) -> Result<bool, Error> {
    form.require_nonempty()?;
    Ok(find_representation(form, n)?.is_some())
}

/// One tuple `x` with `Σ b_i T(x_i) = n`, if any. Coordinates are tried in
/// decreasing order for the largest coefficients, so the search is shallow.
pub fn find_representation(form: &TriangularForm, n: u64) -> Result<Option<Vec<u64>>, Error> {
    form.require_nonempty()?;
    let mut xs = vec![0u64; form.len()];
    Ok(search(form.coeffs(), n, &mut xs).then_some(xs))
}

fn search(coeffs: &[u64], n: u64, xs: &mut [u64]) -> bool {
    match coeffs {
        [] => n == 0,
        [b] => {
            if n.is_multiple_of(*b) {
                if let Some(x) = triangular_root(n / b) {
                    xs[0] = x;
                    return true;
                }
            }
            false
        }
        _ => {
            let last = coeffs.len() - 1;
            let b = coeffs[last];
            let mut x = triangular_floor_root(n / b);
            loop {
                let used = b * (x * (x + 1) / 2);
                if search(&coeffs[..last], n - used, &mut xs[..last]) {
                    xs[last] = x;
                    return true;
                }
                if x == 0 {
                    return false;
                }
                x -= 1;
            }
        }
    }
}

/// Exact counts `t_b(n)` for every `n <= bound`, by convolution with the
/// triangular support of each coefficient.
pub fn rep_counts_up_to(form: &TriangularForm, bound: u64) -> Result<Vec<u64>, Error> {
    form.require_nonempty()?;
    let len = usize::try_from(bound).map_err(|_| Error::Overflow("bound"))? + 1;
    let mut counts = vec![0u64; len];
    counts[0] = 1;
    for &b in form.coeffs() {
        let mut next = vec![0u64; len];
        let mut x = 0u64;
        loop {
            let shift = b * (x * (x + 1) / 2);
            if shift > bound {
                break;
            }
            let shift = shift as usize;
            for (dst, &src) in next[shift..].iter_mut().zip(&counts) {
                *dst += src;
            }
            x += 1;
        }
        counts = next;
    }
    Ok(counts)
}

/// Representability bitmap of a form over `0..=bound`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RepTable {
    form: TriangularForm,
    bound: u64,
    words: Vec<u64>,
}

pub(crate) fn word_count(bound: u64) -> usize {
    (bound / 64 + 1) as usize
}

fn tail_mask(bound: u64) -> u64 {
    let used = bound % 64 + 1;
    if used == 64 {
        u64::MAX
    } else {
        (1u64 << used) - 1
    }
}

/// `dst |= src << shift`, restricted to the length of `dst`. `dst_offset` is
/// the word index of `dst[0]` inside the full table.
fn or_shifted(dst: &mut [u64], dst_offset: usize, src: &[u64], shift: u64) {
    let ws = (shift / 64) as usize;
    let bs = (shift % 64) as u32;
    for (i, d) in dst.iter_mut().enumerate() {
        let gi = dst_offset + i;
        if gi < ws {
            continue;
        }
        let j = gi - ws;
        let mut v = src[j] << bs;
        if bs > 0 && j > 0 {
            v |= src[j - 1] >> (64 - bs);
        }
        *d |= v;
    }
}

/// One layer of the sieve: the union of `src` translated by every `c·T(x) <= bound`.
fn fold_layer(src: &[u64], bound: u64, c: u64) -> Vec<u64> {
    let mut shifts = Vec::new();
    let mut x = 0u64;
    loop {
        let s = match triangular(x).ok().and_then(|t| t.checked_mul(c)) {
            Some(s) if s <= bound => s,
            _ => break,
        };
        shifts.push(s);
        x += 1;
    }
    let mut out = vec![0u64; src.len()];
    if out.len() >= PARALLEL_WORDS && shifts.len() > 1 {
        let chunk = PARALLEL_WORDS / 4;
        out.par_chunks_mut(chunk).enumerate().for_each(|(ci, part)| {
            for &s in &shifts {
                or_shifted(part, ci * chunk, src, s);
            }
        });
    } else {
        for &s in &shifts {
            or_shifted(&mut out, 0, src, s);
        }
    }
    if let Some(last) = out.last_mut() {
        *last &= tail_mask(bound);
    }
    out
}

impl RepTable {
    /// The table of the empty form: only 0 is represented.
    pub(crate) fn trivial(bound: u64) -> Self {
        let mut words = vec![0u64; word_count(bound)];
        words[0] = 1;
        Self { form: TriangularForm::empty(), bound, words }
    }

    /// Rebuilds a table from raw words, checking length and padding bits.
    pub fn from_words(form: TriangularForm, bound: u64, words: Vec<u64>) -> Option<Self> {
        if words.len() != word_count(bound) {
            return None;
        }
        if words.last().copied().unwrap_or(0) & !tail_mask(bound) != 0 {
            return None;
        }
        Some(Self { form, bound, words })
    }

    pub fn form(&self) -> &TriangularForm {
        &self.form
    }

    pub fn bound(&self) -> u64 {
        self.bound
    }

    /// Packed bits: bit `n` lives in word `n / 64` at position `n % 64`.
    pub fn words(&self) -> &[u64] {
        &self.words
    }

    /// `bits[n]`. Panics if `n > bound`.
    pub fn get(&self, n: u64) -> bool {
        assert!(n <= self.bound, "{n} lies beyond the table bound {}", self.bound);
        self.words[(n / 64) as usize] >> (n % 64) & 1 == 1
    }

    fn is_full(&self) -> bool {
        let (last, body) = self.words.split_last().expect("table has at least one word");
        body.iter().all(|&w| w == u64::MAX) && *last == tail_mask(self.bound)
    }

    /// Folds one more coefficient into the table.
    pub fn extend(&self, c: u64) -> Result<Self, Error> {
        let form = self.form.with_coefficient(c)?;
        let words = if c > self.bound || self.is_full() {
            self.words.clone()
        } else {
            fold_layer(&self.words, self.bound, c)
        };
        Ok(Self { form, bound: self.bound, words })
    }

    /// Restriction to `0..=bound`, for serving smaller queries.
    pub fn truncated(&self, bound: u64) -> Self {
        assert!(bound <= self.bound, "cannot truncate upwards");
        let mut words = self.words[..word_count(bound)].to_vec();
        *words.last_mut().expect("non-empty") &= tail_mask(bound);
        Self { form: self.form.clone(), bound, words }
    }

    /// Values `n <= bound` not represented.
    pub fn missing(&self) -> impl Iterator<Item = u64> + '_ {
        let bound = self.bound;
        self.words.iter().enumerate().flat_map(move |(i, &w)| {
            let mut inv = !w;
            std::iter::from_fn(move || {
                if inv == 0 {
                    return None;
                }
                let bit = inv.trailing_zeros() as u64;
                inv &= inv - 1;
                Some(i as u64 * 64 + bit)
            })
            .take_while(move |&n| n <= bound)
        })
    }

    pub fn count_represented(&self) -> u64 {
        self.words.iter().map(|w| w.count_ones() as u64).sum()
    }

    /// Least `n` with `mask[n]` set and `bits[n]` clear.
    pub(crate) fn first_unrepresented_in(&self, mask: &[u64]) -> Option<u64> {
        self.words
            .iter()
            .zip(mask)
            .enumerate()
            .find_map(|(i, (&w, &m))| {
                let hit = m & !w;
                (hit != 0).then(|| i as u64 * 64 + hit.trailing_zeros() as u64)
            })
            .filter(|&n| n <= self.bound)
    }
}

/// Sieve of every `n <= bound` represented by a non-empty form.
pub fn represented_up_to(form: &TriangularForm, bound: u64) -> Result<RepTable, Error> {
    represented_up_to_with_budget(form, bound, DEFAULT_BUDGET_BITS)
}

/// [`represented_up_to`] with an explicit allocation limit in bits.
pub fn represented_up_to_with_budget(
    form: &TriangularForm,
    bound: u64,
    budget_bits: u64,
) -> Result<RepTable, Error> {
    form.require_nonempty()?;
    let requested = bound.checked_add(1).ok_or(Error::Overflow("bound"))?;
    if requested > budget_bits || usize::try_from(bound / 64 + 1).is_err() {
        return Err(Error::BudgetExceeded { requested, budget: budget_bits });
    }
    // largest coefficients first: those layers are the sparsest
    let mut table = RepTable::trivial(bound);
    for &c in form.coeffs().iter().rev() {
        table = table.extend(c)?;
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn form(c: &[u64]) -> TriangularForm {
        TriangularForm::new(c.to_vec()).unwrap()
    }

    /// Nested-loop oracle over explicit tuples.
    fn naive_counts(coeffs: &[u64], bound: u64) -> Vec<u64> {
        let mut counts = vec![0u64; bound as usize + 1];
        fn rec(coeffs: &[u64], acc: u64, bound: u64, counts: &mut [u64]) {
            let Some((&b, rest)) = coeffs.split_first() else {
                counts[acc as usize] += 1;
                return;
            };
            let mut x = 0;
            while acc + b * x * (x + 1) / 2 <= bound {
                rec(rest, acc + b * x * (x + 1) / 2, bound, counts);
                x += 1;
            }
        }
        rec(coeffs, 0, bound, &mut counts);
        counts
    }

    #[test]
    fn triangular_values() {
        assert_eq!(triangular(0), Ok(0));
        assert_eq!(triangular(1), Ok(1));
        assert_eq!(triangular(12), Ok(78));
        assert_eq!(triangular(u64::MAX), Err(Error::Overflow("T(x)")));
        assert!(triangular(1 << 31).is_ok());
        assert!(triangular(1 << 33).is_err());
    }

    #[test]
    fn triangular_roots() {
        for x in 0..2000u64 {
            let t = triangular(x).unwrap();
            assert_eq!(triangular_root(t), Some(x));
            assert_eq!(triangular_floor_root(t), x);
            if t > 0 {
                assert_eq!(triangular_floor_root(t - 1), x - 1);
            }
        }
        assert_eq!(triangular_root(2), None);
    }

    #[test]
    fn form_validation() {
        assert_eq!(TriangularForm::new(vec![1, 0]), Err(Error::ZeroCoefficient { index: 1 }));
        assert_eq!(TriangularForm::new(vec![3, 1]), Err(Error::NotSorted { index: 1 }));
        assert_eq!("3,1,1".parse::<TriangularForm>().unwrap(), form(&[1, 1, 3]));
        assert_eq!(form(&[1, 2]).with_coefficient(1).unwrap(), form(&[1, 1, 2]));
        assert_eq!(form(&[1, 1, 3]).to_string(), "[1,1,3]");
    }

    #[test]
    fn empty_form_is_rejected_by_counting() {
        let e = TriangularForm::empty();
        assert_eq!(count_reps(&e, 0), Err(Error::EmptyForm));
        assert_eq!(represents(&e, 0), Err(Error::EmptyForm));
        assert!(represented_up_to(&e, 10).is_err());
    }

    #[test]
    fn count_examples() {
        // 6 = 6+0+0 and 3+3+0, three orders each
        assert_eq!(naive_counts(&[1, 1, 1], 6)[6], 6);
        assert_eq!(count_reps(&form(&[1, 1, 1]), 6), Ok(6));
        assert_eq!(count_reps(&form(&[2]), 3), Ok(0));
        assert_eq!(count_reps(&form(&[1]), 6), Ok(1));
    }

    #[test]
    fn represents_examples() {
        assert_eq!(naive_counts(&[1, 1, 3], 8)[8], 0);
        assert_eq!(represents(&form(&[1, 1, 3]), 8), Ok(false));
        assert_eq!(represents(&form(&[1, 1, 1]), 7), Ok(true));
        assert_eq!(represents(&form(&[1]), 0), Ok(true));
        let xs = find_representation(&form(&[1, 2, 4]), 1000).unwrap().unwrap();
        assert_eq!(form(&[1, 2, 4]).evaluate(&xs), Ok(1000));
    }

    #[test]
    fn sieve_examples() {
        let t = represented_up_to(&form(&[1, 1, 1]), 20).unwrap();
        assert_eq!(t.missing().count(), 0);
        let t = represented_up_to(&form(&[1, 1, 3]), 20).unwrap();
        assert_eq!(t.missing().collect::<Vec<_>>(), vec![8, 17]);
        let t = represented_up_to(&form(&[2, 3, 4]), 89).unwrap();
        assert_eq!(t.missing().collect::<Vec<_>>(), vec![1, 8, 31]);
    }

    #[test]
    fn sieve_matches_oracle_across_word_boundaries() {
        for bound in [0u64, 1, 63, 64, 65, 127, 128, 500] {
            for c in [&[1u64][..], &[5], &[1, 2, 9], &[3, 3, 7, 70]] {
                let t = represented_up_to(&form(c), bound).unwrap();
                let oracle = naive_counts(c, bound);
                for n in 0..=bound {
                    assert_eq!(t.get(n), oracle[n as usize] > 0, "{c:?} n={n} bound={bound}");
                }
            }
        }
    }

    #[test]
    fn parallel_fold_matches_sequential() {
        // large enough to take the parallel path
        let bound = (PARALLEL_WORDS as u64) * 64 * 2 + 17;
        let f = form(&[1, 4, 9]);
        let t = represented_up_to(&f, bound).unwrap();
        let mut words = RepTable::trivial(bound).words;
        for &c in f.coeffs().iter().rev() {
            let mut shifts = Vec::new();
            let mut x = 0;
            while c * x * (x + 1) / 2 <= bound {
                shifts.push(c * x * (x + 1) / 2);
                x += 1;
            }
            let mut out = vec![0u64; words.len()];
            for s in shifts {
                or_shifted(&mut out, 0, &words, s);
            }
            *out.last_mut().unwrap() &= tail_mask(bound);
            words = out;
        }
        assert_eq!(t.words(), &words[..]);
    }

    #[test]
    fn budget_is_enforced() {
        assert_eq!(
            represented_up_to_with_budget(&form(&[1]), 1000, 100),
            Err(Error::BudgetExceeded { requested: 1001, budget: 100 })
        );
    }

    #[test]
    fn rep_counts_match_enumeration() {
        let f = form(&[1, 2, 2, 5]);
        let counts = rep_counts_up_to(&f, 300).unwrap();
        assert_eq!(counts, naive_counts(f.coeffs(), 300));
        for n in [0, 1, 77, 300] {
            assert_eq!(count_reps(&f, n).unwrap(), counts[n as usize]);
        }
    }

    #[test]
    fn truncation_and_missing() {
        let t = represented_up_to(&form(&[1, 1, 3]), 1000).unwrap();
        let small = t.truncated(100);
        assert_eq!(small, represented_up_to(&form(&[1, 1, 3]), 100).unwrap());
        assert_eq!(t.count_represented() + t.missing().count() as u64, 1001);
    }
}
