use hlab::quadrature::gauss_legendre_on;
use hlab::special::*;
use proptest::prelude::*;
use std::f64::consts::PI;

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

#[test]
fn hermite_functions_are_orthonormal() {
    let (x, w) = gauss_legendre_on(400, -16.0, 16.0);
    let table: Vec<Vec<f64>> = x.iter().map(|&x| hermite_fns(24, x)).collect();
    for m in 0..=24 {
        for n in 0..=m {
            let ip: f64 = table.iter().zip(&w).map(|(h, w)| h[m] * h[n] * w).sum();
            let expected = if m == n { 1.0 } else { 0.0 };
            assert!((ip - expected).abs() < 1e-12, "<H_{m}, H_{n}> = {ip}");
        }
    }
}

#[test]
fn hermite_functions_use_the_creation_operator_normalization() {
    // H_m = (2^m m! √π)^{-1/2} h_m(x) e^{-x²/2}, with h_m the physicists' polynomials.
    for x in [-2.5f64, -0.3, 0.0, 1.1, 3.7] {
        let (mut prev, mut cur) = (0.0, 1.0);
        for m in 0..=12 {
            let norm = (2f64.powi(m as i32) * factorial(m) * PI.sqrt()).sqrt();
            let expected = cur * (-0.5 * x * x).exp() / norm;
            assert!((hermite_fn(m, x) - expected).abs() < 1e-13 * (1.0 + expected.abs()));
            let next = 2.0 * x * cur - 2.0 * m as f64 * prev;
            prev = cur;
            cur = next;
        }
    }
}

#[test]
fn scaled_hermite_functions_stay_normalized() {
    let (x, w) = gauss_legendre_on(300, -20.0, 20.0);
    for lambda in [0.25, -1.0, 4.0] {
        for m in [0, 3, 7] {
            let norm: f64 = x
                .iter()
                .zip(&w)
                .map(|(&x, w)| hermite_fn_scaled(m, lambda, x).unwrap().powi(2) * w)
                .sum();
            assert!((norm - 1.0).abs() < 1e-12);
        }
    }
    assert!(hermite_fn_scaled(0, 0.0, 1.0).is_err());
}

#[test]
fn laguerre_polynomials_are_orthogonal() {
    for alpha in 0..=2 {
        let (x, w) = gauss_legendre_on(400, 0.0, 120.0);
        for i in 0..=8 {
            for j in 0..=i {
                let ip: f64 = x
                    .iter()
                    .zip(&w)
                    .map(|(&x, w)| laguerre(i, alpha, x) * laguerre(j, alpha, x) * x.powi(alpha as i32) * (-x).exp() * w)
                    .sum();
                let expected = if i == j { factorial(i + alpha) / factorial(i) } else { 0.0 };
                assert!((ip - expected).abs() < 1e-9 * (1.0 + expected), "alpha {alpha} ({i}, {j}): {ip}");
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn mehler_sum_matches_closed_form(x in -2.0..2.0f64, xt in -2.0..2.0f64, r in -0.6..0.6f64) {
        let sum = mehler_sum(x, xt, r, TruncationBudget::default()).unwrap();
        prop_assert!((sum.value - mehler_closed(x, xt, r).unwrap()).abs() < 1e-10);
    }

    #[test]
    fn heat_mehler_sum_matches_closed_form(lambda in 0.1..5.0f64, t in 0.1..2.0f64, y in -1.5..1.5f64, z in -1.5..1.5f64) {
        prop_assume!(t * lambda >= 0.1);
        let sum = mehler_heat_sum(lambda, t, y, z, TruncationBudget::default()).unwrap();
        prop_assert!((sum.value - mehler_heat_closed(lambda, t, y, z).unwrap()).abs() < 1e-10);
    }

    #[test]
    fn laguerre_generating_function(r in -0.5..0.5f64, x in 0.0..6.0f64, alpha in 0usize..3) {
        let terms = laguerre_all(80, alpha, x);
        let sum: f64 = terms.iter().enumerate().map(|(k, l)| l * r.powi(k as i32)).sum();
        let closed = laguerre_generating_closed(r, x, alpha).unwrap();
        prop_assert!((sum - closed).abs() < 1e-10 * (1.0 + closed.abs()));
    }

    #[test]
    fn damped_laguerre_matches_the_plain_product(ell in 0usize..30, alpha in 0usize..3, x in 0.0..40.0f64) {
        let damped = laguerre_damped_all(ell, alpha, x)[ell];
        let plain = (-0.5 * x).exp() * laguerre(ell, alpha, x);
        prop_assert!((damped - plain).abs() < 1e-10 * (1.0 + plain.abs()));
    }

    #[test]
    fn hyperbolic_ratios_match_their_definitions(tau in 0.01..15.0f64, d in 1usize..4) {
        let ratio = (2.0 * tau / (2.0 * tau).sinh()).powi(d as i32);
        prop_assert!((sinh_ratio_pow(tau, d) - ratio).abs() <= 1e-12 * ratio);
        prop_assert_eq!(sinh_ratio_pow(-tau, d), sinh_ratio_pow(tau, d));
        let coth = tau / (2.0 * tau).tanh();
        prop_assert!((tau_over_tanh2(tau) - coth).abs() <= 1e-12 * coth);
    }
}

#[test]
fn series_report_exhausted_budgets() {
    let tight = TruncationBudget::new(3, 1e-15).unwrap();
    assert!(mehler_sum(0.5, 0.5, 0.9, tight).is_err());
    assert!(TruncationBudget::new(0, 1e-3).is_err());
    assert!(mehler_closed(0.0, 0.0, 1.0).is_err());
}
