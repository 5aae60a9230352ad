//! Representation numbers of positive definite ternary forms and of diagonal
//! forms, the all-odd restriction and its link to triangular forms, and the
//! ternary equivalences for eight triangular forms.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use thiserror::Error;

use crate::triangular::{self, isqrt, RepTable, TriangularForm};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("diagonal coefficients must be positive")]
    NonPositiveDiagonal,
    #[error("form is not positive definite (leading minors {0:?})")]
    NotPositiveDefinite([i64; 3]),
    #[error("diagonal form has a zero coefficient")]
    ZeroCoefficient,
    #[error("equivalence rows need a ternary triangular form and multiplier 2, 4 or 8")]
    InvalidRow,
    #[error("cannot parse shift {0:?}; expected e.g. 8n+5")]
    BadShift(String),
    #[error("shifted value overflows")]
    Overflow,
    #[error(transparent)]
    Triangular(#[from] triangular::Error),
}

/// An affine map `n ↦ multiplier·n + offset`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Shift {
    pub multiplier: u64,
    pub offset: u64,
}

impl Shift {
    pub const IDENTITY: Shift = Shift { multiplier: 1, offset: 0 };

    pub fn new(multiplier: u64, offset: u64) -> Self {
        Self { multiplier, offset }
    }

    pub fn apply(&self, n: u64) -> Option<u64> {
        self.multiplier.checked_mul(n)?.checked_add(self.offset)
    }
}

impl fmt::Display for Shift {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.multiplier, self.offset) {
            (1, 0) => write!(f, "n"),
            (1, o) => write!(f, "n+{o}"),
            (m, 0) => write!(f, "{m}n"),
            (m, o) => write!(f, "{m}n+{o}"),
        }
    }
}

impl FromStr for Shift {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || Error::BadShift(s.to_string());
        let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        let (lhs, offset) = match t.split_once('+') {
            Some((l, o)) => (l, o.parse::<u64>().map_err(|_| bad())?),
            None => (t.as_str(), 0),
        };
        let mult = lhs.strip_suffix('n').ok_or_else(bad)?;
        let multiplier = if mult.is_empty() { 1 } else { mult.parse().map_err(|_| bad())? };
        Ok(Shift { multiplier, offset })
    }
}

/// `Q(x,y,z) = ax² + by² + cz² + dxy + exz + fyz`, positive definite.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TernaryQuadraticForm {
    a: i64,
    b: i64,
    c: i64,
    d: i64,
    e: i64,
    f: i64,
}

impl TernaryQuadraticForm {
    pub fn new(a: i64, b: i64, c: i64, d: i64, e: i64, f: i64) -> Result<Self, Error> {
        if a < 1 || b < 1 || c < 1 {
            return Err(Error::NonPositiveDiagonal);
        }
        let q = Self { a, b, c, d, e, f };
        let minors = q.hessian_minors();
        if minors.iter().any(|&m| m <= 0) {
            return Err(Error::NotPositiveDefinite(minors));
        }
        Ok(q)
    }

    pub fn diagonal(a: i64, b: i64, c: i64) -> Result<Self, Error> {
        Self::new(a, b, c, 0, 0, 0)
    }

    /// `(a, b, c, d, e, f)`.
    pub fn coefficients(&self) -> [i64; 6] {
        [self.a, self.b, self.c, self.d, self.e, self.f]
    }

    /// Leading principal minors of the Hessian `H = [[2a,d,e],[d,2b,f],[e,f,2c]]`.
    fn hessian_minors(&self) -> [i64; 3] {
        [2 * self.a, 4 * self.a * self.b - self.d * self.d, self.hessian_det()]
    }

    fn hessian_det(&self) -> i64 {
        let Self { a, b, c, d, e, f } = *self;
        let (h11, h22, h33) = (2 * a, 2 * b, 2 * c);
        h11 * (h22 * h33 - f * f) - d * (d * h33 - f * e) + e * (d * f - h22 * e)
    }

    /// Diagonal cofactors of the Hessian.
    fn hessian_cofactors(&self) -> [i64; 3] {
        let Self { a, b, c, d, e, f } = *self;
        [4 * b * c - f * f, 4 * a * c - e * e, 4 * a * b - d * d]
    }

    /// Largest `|x_i|` on the ellipsoid `Q <= m`: `x_i² <= 2m · cof_ii / det H`.
    fn box_bounds(&self, m: u64) -> [i64; 3] {
        let det = self.hessian_det() as u128;
        self.hessian_cofactors()
            .map(|cof| isqrt((2 * m as u128 * cof as u128 / det) as u64) as i64)
    }

    pub fn evaluate(&self, x: i64, y: i64, z: i64) -> i64 {
        let Self { a, b, c, d, e, f } = *self;
        a * x * x + b * y * y + c * z * z + d * x * y + e * x * z + f * y * z
    }

    /// `r_Q(m)`: integer triples with `Q(x,y,z) = m`, solving for `z` exactly.
    pub fn rq_count(&self, m: u64) -> u64 {
        let [bx, by, _] = self.box_bounds(m);
        let m = m as i64;
        let (c, e, f) = (self.c, self.e, self.f);
        (-bx..=bx)
            .into_par_iter()
            .map(|x| {
                let mut count = 0u64;
                for y in -by..=by {
                    let lin = e * x + f * y;
                    let k = self.a * x * x + self.b * y * y + self.d * x * y - m;
                    let disc = lin * lin - 4 * c * k;
                    if disc < 0 {
                        continue;
                    }
                    let s = isqrt(disc as u64) as i64;
                    if s * s != disc {
                        continue;
                    }
                    for num in [-lin - s, -lin + s] {
                        if num % (2 * c) == 0 {
                            count += 1;
                        }
                        if s == 0 {
                            break;
                        }
                    }
                }
                count
            })
            .sum()
    }

    /// Theta-series coefficients `r_Q(m)` for every `m <= max`, by enumerating
    /// the lattice points inside the ellipsoid `Q <= max`.
    pub fn theta_series(&self, max: u64) -> Vec<u64> {
        let [bx, by, _] = self.box_bounds(max);
        let len = max as usize + 1;
        let maxi = max as i64;
        let two_c = 2 * self.c;
        (-bx..=bx)
            .into_par_iter()
            .fold(
                || vec![0u64; len],
                |mut acc, x| {
                    for y in -by..=by {
                        let lin = self.e * x + self.f * y;
                        let k = self.a * x * x + self.b * y * y + self.d * x * y;
                        // c z² + lin z + k <= max
                        let disc = lin * lin - 4 * self.c * (k - maxi);
                        if disc < 0 {
                            continue;
                        }
                        let s = isqrt(disc as u64) as i64;
                        let lo = (-lin - s - 1).div_euclid(two_c);
                        let hi = (-lin + s + 1).div_euclid(two_c) + 1;
                        for z in lo..=hi {
                            let v = k + lin * z + self.c * z * z;
                            if (0..=maxi).contains(&v) {
                                acc[v as usize] += 1;
                            }
                        }
                    }
                    acc
                },
            )
            .reduce(
                || vec![0u64; len],
                |mut l, r| {
                    l.iter_mut().zip(r).for_each(|(a, b)| *a += b);
                    l
                },
            )
    }
}

impl fmt::Display for TernaryQuadraticForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [a, b, c, d, e, g] = self.coefficients();
        write!(f, "({a},{b},{c},{d},{e},{g})")
    }
}

/// `Σ b_i x_i²` over integer `x_i`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DiagonalForm {
    coeffs: Vec<u64>,
}

impl DiagonalForm {
    pub fn new(coeffs: Vec<u64>) -> Result<Self, Error> {
        if coeffs.contains(&0) {
            return Err(Error::ZeroCoefficient);
        }
        Ok(Self { coeffs })
    }

    pub fn coeffs(&self) -> &[u64] {
        &self.coeffs
    }

    /// Number of integer tuples with `Σ b_i x_i² = m`.
    pub fn rq_count(&self, m: u64) -> u64 {
        signed_count(&self.coeffs, m, false)
    }

    /// `r^o(m)`: integer tuples with every `x_i` odd and `Σ b_i x_i² = m`.
    pub fn rq_odd_count(&self, m: u64) -> u64 {
        if self.coeffs.is_empty() {
            return (m == 0) as u64;
        }
        signed_count(&self.coeffs, m, true)
    }

    /// Unrestricted representation numbers for every `m <= max`.
    pub fn theta_series(&self, max: u64) -> Vec<u64> {
        convolve_squares(&self.coeffs, max, false)
    }

    /// All-odd representation numbers for every `m <= max`.
    pub fn odd_theta_series(&self, max: u64) -> Vec<u64> {
        convolve_squares(&self.coeffs, max, true)
    }

    /// The alternating sum over subsets `E` of coordinates of
    /// `(-1)^|E| · #{x : Σ b_i x_i² = m, x_i even for i ∈ E}`.
    pub fn inclusion_exclusion_odd(&self, m: u64) -> i64 {
        self.even_constrained_forms()
            .map(|(sign, form)| sign * signed_count(&form, m, false) as i64)
            .sum()
    }

    /// [`Self::inclusion_exclusion_odd`] for every `m <= max` at once.
    pub fn inclusion_exclusion_odd_series(&self, max: u64) -> Vec<i64> {
        let mut total = vec![0i64; max as usize + 1];
        for (sign, form) in self.even_constrained_forms() {
            for (t, r) in total.iter_mut().zip(convolve_squares(&form, max, false)) {
                *t += sign * r as i64;
            }
        }
        total
    }

    /// Each subset `E` as a sign and the form with `b_i → 4 b_i` on `E`
    /// (an even `x_i = 2y_i` contributes `4 b_i y_i²`).
    fn even_constrained_forms(&self) -> impl Iterator<Item = (i64, Vec<u64>)> + '_ {
        let k = self.coeffs.len();
        (0u32..1 << k).map(move |mask| {
            let form = self
                .coeffs
                .iter()
                .enumerate()
                .map(|(i, &b)| if mask >> i & 1 == 1 { 4 * b } else { b })
                .collect();
            let sign = if mask.count_ones() % 2 == 0 { 1 } else { -1 };
            (sign, form)
        })
    }
}

impl From<&TriangularForm> for DiagonalForm {
    fn from(form: &TriangularForm) -> Self {
        Self { coeffs: form.coeffs().to_vec() }
    }
}

fn signed_count(coeffs: &[u64], m: u64, odd: bool) -> u64 {
    let Some((&b, rest)) = coeffs.split_first() else {
        return (m == 0) as u64;
    };
    let mut total = 0;
    let mut x = if odd { 1u64 } else { 0 };
    while b * x * x <= m {
        let ways = if x == 0 { 1 } else { 2 };
        total += ways * signed_count(rest, m - b * x * x, odd);
        x += if odd { 2 } else { 1 };
    }
    total
}

fn convolve_squares(coeffs: &[u64], max: u64, odd: bool) -> Vec<u64> {
    let len = max as usize + 1;
    let mut series = vec![0u64; len];
    series[0] = 1;
    for &b in coeffs {
        let mut next = vec![0u64; len];
        let mut x = if odd { 1u64 } else { 0 };
        while b * x * x <= max {
            let shift = (b * x * x) as usize;
            let ways = if x == 0 { 1 } else { 2 };
            for (dst, &src) in next[shift..].iter_mut().zip(&series) {
                *dst += ways * src;
            }
            x += if odd { 2 } else { 1 };
        }
        series = next;
    }
    series
}

/// Whether `r^o(8n + Σ b_i) = 2^k · t_b(n)`. The map `x ↦ 2x+1` sends a
/// triangular tuple to a positive odd tuple; sign choices give the `2^k`.
pub fn shift_identity_check(form: &TriangularForm, n: u64) -> Result<bool, Error> {
    let t = triangular::count_reps(form, n)?;
    let m = 8u64
        .checked_mul(n)
        .and_then(|v| v.checked_add(form.coeff_sum()))
        .ok_or(Error::Overflow)?;
    let odd = DiagonalForm::from(form).rq_odd_count(m);
    Ok(odd == t << form.len())
}

/// Every `n <= n_max` where the shift identity fails, via series.
pub fn shift_identity_violations(form: &TriangularForm, n_max: u64) -> Result<Vec<u64>, Error> {
    let t = triangular::rep_counts_up_to(form, n_max)?;
    let sum = form.coeff_sum();
    let odd = DiagonalForm::from(form).odd_theta_series(8 * n_max + sum);
    Ok((0..=n_max)
        .filter(|&n| odd[(8 * n + sum) as usize] != t[n as usize] << form.len())
        .collect())
}

/// A claimed equivalence: `triangular` represents `n` iff `quadratic`
/// represents `shift(n)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EquivalenceRow {
    pub triangular: TriangularForm,
    pub quadratic: TernaryQuadraticForm,
    pub shift: Shift,
}

impl EquivalenceRow {
    pub fn new(
        triangular: TriangularForm,
        quadratic: TernaryQuadraticForm,
        shift: Shift,
    ) -> Result<Self, Error> {
        if triangular.len() != 3 || ![2, 4, 8].contains(&shift.multiplier) {
            return Err(Error::InvalidRow);
        }
        Ok(Self { triangular, quadratic, shift })
    }
}

/// The eight built-in equivalence rows, in table order.
pub fn table1_rows() -> Vec<EquivalenceRow> {
    const ROWS: [([u64; 3], [i64; 6], u64, u64); 8] = [
        ([1, 2, 6], [2, 4, 7, 0, 0, 4], 8, 9),
        ([1, 2, 8], [2, 4, 9, 0, 0, 4], 8, 11),
        ([1, 2, 9], [2, 3, 4, 2, 0, 2], 2, 3),
        ([1, 2, 11], [1, 6, 8, 0, 0, 4], 4, 7),
        ([1, 4, 5], [1, 4, 5, 0, 0, 0], 8, 10),
        ([1, 4, 8], [4, 4, 9, 0, 4, 0], 8, 13),
        ([1, 4, 9], [1, 4, 9, 0, 0, 0], 8, 14),
        ([1, 5, 6], [3, 3, 4, 0, 2, 2], 2, 3),
    ];
    ROWS.iter()
        .map(|&(t, [a, b, c, d, e, f], mult, off)| EquivalenceRow {
            triangular: TriangularForm::new(t.to_vec()).expect("sorted constant"),
            quadratic: TernaryQuadraticForm::new(a, b, c, d, e, f).expect("definite constant"),
            shift: Shift::new(mult, off),
        })
        .collect()
}

/// All `n <= bound` where the two sides of the row disagree.
pub fn table1_check(row: &EquivalenceRow, bound: u64) -> Result<Vec<u64>, Error> {
    let table: RepTable = triangular::represented_up_to(&row.triangular, bound)?;
    let top = row.shift.apply(bound).ok_or(Error::Overflow)?;
    let theta = row.quadratic.theta_series(top);
    Ok((0..=bound)
        .filter(|&n| {
            let m = row.shift.apply(n).expect("bounded by top") as usize;
            table.get(n) != (theta[m] > 0)
        })
        .collect())
}

fn form125() -> TernaryQuadraticForm {
    TernaryQuadraticForm::diagonal(1, 2, 5).expect("definite")
}

/// Every `n <= n_max` with `r_(1,2,5)(8n+8) != 2·r_(1,2,5)(2n+2)`.
pub fn genus125_density_check(n_max: u64) -> Vec<u64> {
    let theta = form125().theta_series(8 * n_max + 8);
    (0..=n_max)
        .filter(|&n| theta[(8 * n + 8) as usize] != 2 * theta[(2 * n + 2) as usize])
        .collect()
}

/// Every `n <= n_max` violating `8·t_[1,2,5](n) = r_(1,2,5)(8n+8) − r_(1,2,5)(2n+2)`.
/// Even coordinates must all be even at `8n+8`, and `r_(4,8,20)(8n+8) = r_(1,2,5)(2n+2)`.
pub fn genus125_companion_check(n_max: u64) -> Result<Vec<u64>, Error> {
    let form = TriangularForm::new(vec![1, 2, 5])?;
    let t = triangular::rep_counts_up_to(&form, n_max)?;
    let theta = form125().theta_series(8 * n_max + 8);
    Ok((0..=n_max)
        .filter(|&n| {
            let (hi, lo) = (theta[(8 * n + 8) as usize], theta[(2 * n + 2) as usize]);
            hi < lo || 8 * t[n as usize] != hi - lo
        })
        .collect())
}

/// Every `n <= n_max` where `t_[1,2,5](n) > 0` and `r_(1,2,5)(2n+2) > 0` disagree.
pub fn genus125_positivity_check(n_max: u64) -> Result<Vec<u64>, Error> {
    let form = TriangularForm::new(vec![1, 2, 5])?;
    let table = triangular::represented_up_to(&form, n_max)?;
    let theta = form125().theta_series(2 * n_max + 2);
    Ok((0..=n_max)
        .filter(|&n| table.get(n) != (theta[(2 * n + 2) as usize] > 0))
        .collect())
}
