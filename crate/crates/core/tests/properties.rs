use proptest::prelude::*;

use trinum::quadform::{self, DiagonalForm, TernaryQuadraticForm};
use trinum::triangular::{self, TriangularForm};

/// Nested loops over every tuple `b_i T(x_i) <= n`, in input order.
fn naive_count(coeffs: &[u64], n: u64) -> u64 {
    match coeffs.split_first() {
        None => (n == 0) as u64,
        Some((&b, rest)) => (0u64..)
            .map(|x| b * x * (x + 1) / 2)
            .take_while(|&v| v <= n)
            .map(|v| naive_count(rest, n - v))
            .sum(),
    }
}

fn coeffs(max_len: usize, max_coeff: u64) -> impl Strategy<Value = Vec<u64>> {
    prop::collection::vec(1..=max_coeff, 1..=max_len)
}

fn sorted(mut v: Vec<u64>) -> TriangularForm {
    v.sort_unstable();
    TriangularForm::new(v).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sieve_matches_naive_oracle(c in coeffs(5, 12), bound in 0u64..2000) {
        let form = sorted(c.clone());
        let table = triangular::represented_up_to(&form, bound).unwrap();
        for n in 0..=bound {
            let naive = naive_count(&c, n) > 0;
            prop_assert_eq!(table.get(n), naive, "n = {}", n);
            if n % 97 == 0 {
                prop_assert_eq!(triangular::represents(&form, n).unwrap(), naive);
            }
        }
    }

    #[test]
    fn count_ignores_coefficient_order(c in coeffs(4, 10), n in 0u64..600) {
        let form = sorted(c.clone());
        prop_assert_eq!(triangular::count_reps(&form, n).unwrap(), naive_count(&c, n));
        prop_assert!(TriangularForm::new(c.clone()).is_ok() == c.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn extending_a_form_keeps_represented_values(c in coeffs(4, 12), extra in 1u64..20) {
        let form = sorted(c);
        let bigger = form.with_coefficient(extra).unwrap();
        let small = triangular::represented_up_to(&form, 1500).unwrap();
        let large = triangular::represented_up_to(&bigger, 1500).unwrap();
        for n in 0..=1500 {
            prop_assert!(!small.get(n) || large.get(n));
        }
    }

    #[test]
    fn scaling_scales_the_image(c in coeffs(4, 8), scale in 1u64..6, n in 0u64..400) {
        let form = sorted(c);
        let scaled = form.scaled(scale).unwrap();
        prop_assert_eq!(
            triangular::represents(&scaled, scale * n).unwrap(),
            triangular::represents(&form, n).unwrap()
        );
    }

    #[test]
    fn parallel_and_counting_paths_agree(c in coeffs(4, 9)) {
        let form = sorted(c);
        let counts = triangular::rep_counts_up_to(&form, 3000).unwrap();
        let table = triangular::represented_up_to(&form, 3000).unwrap();
        for (n, &k) in counts.iter().enumerate() {
            prop_assert_eq!(table.get(n as u64), k > 0);
        }
    }

    #[test]
    fn inclusion_exclusion_isolates_odd_solutions(c in coeffs(4, 12)) {
        let q = DiagonalForm::new(c).unwrap();
        let ie = q.inclusion_exclusion_odd_series(2000);
        let odd = q.odd_theta_series(2000);
        for m in 0..=2000usize {
            prop_assert_eq!(ie[m], odd[m] as i64, "m = {}", m);
        }
    }

    #[test]
    fn odd_counts_vanish_off_the_residue(c in coeffs(4, 12), m in 0u64..2000) {
        let q = DiagonalForm::new(c.clone()).unwrap();
        let sum: u64 = c.iter().sum();
        if m % 8 != sum % 8 {
            prop_assert_eq!(q.rq_odd_count(m), 0);
        }
    }

    #[test]
    fn diagonal_counts_are_even(c in prop::collection::vec(1i64..=12, 3), m in 1u64..1500) {
        let q = TernaryQuadraticForm::diagonal(c[0], c[1], c[2]).unwrap();
        prop_assert_eq!(q.rq_count(m) % 2, 0);
    }

    #[test]
    fn shift_identity(c in coeffs(4, 10), n in 0u64..1000) {
        let form = sorted(c);
        prop_assert!(quadform::shift_identity_check(&form, n).unwrap());
    }

    #[test]
    fn ternary_count_matches_series(
        d in -2i64..=2, e in -2i64..=2, f in -2i64..=2, a in 2i64..5, b in 2i64..5, c in 2i64..6,
    ) {
        if let Ok(q) = TernaryQuadraticForm::new(a, b, c, d, e, f) {
            let theta = q.theta_series(300);
            for m in (0..=300u64).step_by(7) {
                prop_assert_eq!(q.rq_count(m), theta[m as usize], "m = {}", m);
            }
        }
    }
}
