use flextti::model::{derive_success_probs, finite_blocklength_error, gaussian_q, ChannelSpec};
use flextti::ModelParams;
use proptest::prelude::*;

/// Error probability at n = 200, b = 100, gamma = 1, evaluated once with
/// 50-digit arithmetic and frozen.
const GOLDEN_200_100_1: f64 = 2.103701296657094e-9;

/// `Q(x)` by composite Simpson integration of the normal density over
/// `[x, x + 16]`, using `Q(x) = 1 - Q(-x)` for negative arguments.
fn q_quadrature(x: f64) -> f64 {
    if x < 0.0 {
        return 1.0 - q_quadrature(-x);
    }
    let n = 400_000;
    let h = 16.0 / n as f64;
    let f = |t: f64| (-0.5 * t * t).exp();
    let mut s = f(x) + f(x + 16.0);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(x + i as f64 * h);
    }
    s * h / 3.0 / (2.0 * std::f64::consts::PI).sqrt()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

#[test]
fn gaussian_tail_matches_quadrature() {
    for i in -16..=16 {
        let x = i as f64 * 0.5;
        let q = q_quadrature(x);
        assert!(
            rel(gaussian_q(x), q) < 1e-12,
            "x {x}: {} vs {q}",
            gaussian_q(x)
        );
    }
}

#[test]
fn error_probability_golden_value() {
    let spec = ChannelSpec::new(200, 100, 1.0).unwrap();
    // Normal approximation argument, written out independently.
    let log2e = std::f64::consts::LOG2_E;
    let v = 0.75 * log2e * log2e;
    let x = (200.0 - 100.0 + 0.5 * 200f64.log2()) / (200.0 * v).sqrt();
    assert!((x - 5.8758259307917084).abs() < 1e-13);
    assert!(rel(q_quadrature(x), GOLDEN_200_100_1) < 1e-10);
    assert!(rel(finite_blocklength_error(&spec), GOLDEN_200_100_1) < 1e-12);
}

#[test]
fn success_pair_composes_two_error_evaluations() {
    let spec = ChannelSpec::new(200, 100, 1.0).unwrap();
    let (p1, p2) = derive_success_probs(&spec);
    assert_eq!(p1, 1.0 - finite_blocklength_error(&spec));
    let stretched = ChannelSpec::new(400, 100, 1.0).unwrap();
    assert_eq!(p2, 1.0 - finite_blocklength_error(&stretched));
    assert!(rel(1.0 - p1, GOLDEN_200_100_1) < 1e-6);
    assert_eq!(p2, 1.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn error_is_monotone_in_each_argument(
        n in 1u32..2000,
        b in 1u32..2000,
        gamma_db in -10.0..20.0f64,
        dn in 1u32..200,
        db in 1u32..200,
        dg in 0.01..5.0f64,
    ) {
        let eps = |n, b, g| finite_blocklength_error(&ChannelSpec::from_db(n, b, g).unwrap());
        let base = eps(n, b, gamma_db);
        prop_assert!(eps(n + dn, b, gamma_db) <= base);
        prop_assert!(eps(n, b + db, gamma_db) >= base);
        prop_assert!(eps(n, b, gamma_db + dg) <= base);
    }

    #[test]
    fn derived_pair_is_always_a_valid_model(
        n in 1u32..4000,
        b in 1u32..4000,
        gamma_db in -30.0..30.0f64,
        lambda in 0.0..1.0f64,
        q1 in 0.0..=1.0f64,
    ) {
        let (p1, p2) = derive_success_probs(&ChannelSpec::from_db(n, b, gamma_db).unwrap());
        prop_assert!(ModelParams::new(lambda, q1, p1, p2).is_ok());
    }
}
