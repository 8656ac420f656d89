mod common;

use common::*;
use hffeat::trend::{affine_fit, l1_trend_filter_samples, lambda_max_samples, second_diff, DEFAULT_TOL};
use proptest::prelude::*;
use rand::Rng;

fn random_y(r: &mut rand_chacha::ChaCha8Rng, n: usize) -> Vec<f64> {
    // a random walk with noise, so that solutions have a few kinks
    let mut level = 0.0;
    let mut slope = 0.0;
    (0..n)
        .map(|_| {
            if r.random_bool(0.05) {
                slope = r.random_range(-0.5..0.5);
            }
            level += slope;
            level + r.random_range(-1.0..1.0)
        })
        .collect()
}

#[test]
fn zero_lambda_returns_data() {
    let mut r = rng(10);
    for _ in 0..20 {
        let y = random_y(&mut r, 100);
        let est = l1_trend_filter_samples(&y, 0.0, DEFAULT_TOL).unwrap();
        let err = est.values.iter().zip(&y).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err <= 1e-8);
    }
}

#[test]
fn beyond_lambda_max_gives_least_squares_line() {
    let mut r = rng(11);
    for _ in 0..20 {
        let n = r.random_range(5..300usize);
        let y = random_y(&mut r, n);
        let lmax = lambda_max_samples(&y);
        let est = l1_trend_filter_samples(&y, 1.01 * lmax, DEFAULT_TOL).unwrap();
        let line = least_squares_line(&y);
        let err = est.values.iter().zip(&line).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err <= 1e-6, "n = {n}: {err}");
        let fit = affine_fit(&y);
        assert!(fit.iter().zip(&line).all(|(a, b)| (a - b).abs() <= 1e-9 * (1.0 + b.abs())));
    }
}

#[test]
fn below_lambda_max_is_not_affine() {
    let mut r = rng(12);
    let y = random_y(&mut r, 120);
    let lmax = lambda_max_samples(&y);
    let est = l1_trend_filter_samples(&y, 0.9 * lmax, DEFAULT_TOL).unwrap();
    let line = least_squares_line(&y);
    assert!(trend_objective(&y, &est.values, 0.9 * lmax) < trend_objective(&y, &line, 0.9 * lmax));
    assert!(!est.knots.is_empty());
}

#[test]
fn duality_gap_on_random_instances() {
    let mut r = rng(13);
    for i in 0..50 {
        let y = random_y(&mut r, 200);
        let lambda = 10f64.powf(r.random_range(-1.0..2.5));
        let est = l1_trend_filter_samples(&y, lambda, DEFAULT_TOL).unwrap();
        let obj = trend_objective(&y, &est.values, lambda);
        assert!((obj - est.objective).abs() <= 1e-9 * (1.0 + obj.abs()));
        assert!(est.dual_gap <= 1e-8 * (1.0 + obj.abs()), "instance {i}: gap {}", est.dual_gap);
    }
}

#[test]
fn six_points_match_coordinate_search() {
    let cases: [(&[f64], f64); 5] = [
        (&[0.0, 1.0, 0.0, 2.0, 1.0, 3.0], 0.3),
        (&[0.0, 1.0, 0.0, 2.0, 1.0, 3.0], 1.0),
        (&[3.0, 1.0, 0.5, 0.4, 1.2, 2.5], 0.2),
        (&[1.0, -2.0, 4.0, -1.0, 0.0, 2.0], 2.0),
        (&[0.0, 0.1, 0.3, 0.2, 5.0, 0.0], 0.7),
    ];
    for (y, lambda) in cases {
        let est = l1_trend_filter_samples(y, lambda, 1e-12).unwrap();
        let (_, best) = coordinate_search(y, lambda);
        let obj = trend_objective(y, &est.values, lambda);
        assert!((obj - best).abs() <= 1e-6, "y {y:?} lambda {lambda}: {obj} vs {best}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn never_worse_than_data(
        y in prop::collection::vec(-10.0f64..10.0, 3..60),
        lambda in 0.0f64..50.0,
    ) {
        let est = l1_trend_filter_samples(&y, lambda, DEFAULT_TOL).unwrap();
        let tol = 1e-8 * (1.0 + est.objective.abs());
        prop_assert!(est.objective <= trend_objective(&y, &y, lambda) + tol);
        prop_assert!(est.objective <= trend_objective(&y, &least_squares_line(&y), lambda) + tol);
    }

    #[test]
    fn penalty_nonincreasing_in_lambda(y in prop::collection::vec(-10.0f64..10.0, 5..50)) {
        let lmax = lambda_max_samples(&y);
        let mut prev = f64::INFINITY;
        for frac in [0.01, 0.05, 0.1, 0.3, 0.6, 1.0] {
            let est = l1_trend_filter_samples(&y, frac * lmax, DEFAULT_TOL).unwrap();
            let pen: f64 = second_diff(&est.values).iter().map(|v| v.abs()).sum();
            let scale = y.iter().fold(1.0_f64, |a, v| a.max(v.abs()));
            prop_assert!(pen <= prev + 1e-6 * scale, "{} > {}", pen, prev);
            prev = pen;
        }
    }

    #[test]
    fn shift_equivariant(
        y in prop::collection::vec(-10.0f64..10.0, 3..50),
        c in -100.0f64..100.0,
        lambda in 0.0f64..20.0,
    ) {
        let a = l1_trend_filter_samples(&y, lambda, DEFAULT_TOL).unwrap();
        let shifted: Vec<f64> = y.iter().map(|v| v + c).collect();
        let b = l1_trend_filter_samples(&shifted, lambda, DEFAULT_TOL).unwrap();
        // both are within the gap tolerance of the same optimum; strong
        // convexity bounds the distance by sqrt(2 gap)
        let tol = 1e-5 * (1.0 + c.abs() + a.objective.abs());
        for (u, v) in a.values.iter().zip(&b.values) {
            prop_assert!((u + c - v).abs() <= tol);
        }
    }

    #[test]
    fn piecewise_linear_off_knots(
        y in prop::collection::vec(-10.0f64..10.0, 3..80),
        lambda in 0.1f64..30.0,
    ) {
        let est = l1_trend_filter_samples(&y, lambda, DEFAULT_TOL).unwrap();
        let scale = y.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
        for (i, v) in second_diff(&est.values).iter().enumerate() {
            if !est.knots.contains(&(i + 1)) {
                prop_assert!(v.abs() <= 1e-6 * scale);
            }
        }
    }
}
