use proptest::prelude::*;
use qensemble::oracle::{ensemble_error, EnsembleErrorParams};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn err(e_model: f64, rho: f64, b: u64) -> f64 {
    ensemble_error(&EnsembleErrorParams { e_model, rho, b }).unwrap()
}

#[test]
fn grid_matches_variance_decomposition() {
    // rho * E + (1 - rho) * E / B, written the other way round
    for i in 1..=10 {
        let e = i as f64 / 10.0;
        for j in 0..10 {
            let rho = j as f64 / 9.0;
            for k in 0..=10 {
                let b = 1u64 << k;
                let expected = rho * e + (1.0 - rho) * e / b as f64;
                assert!((err(e, rho, b) - expected).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn limit_is_correlated_part() {
    for (e, rho) in [(0.3, 0.5), (1.0, 0.0), (0.7, 0.9)] {
        assert!((err(e, rho, 1 << 20) - rho * e).abs() < 1e-4);
    }
}

#[test]
fn reference_value() {
    assert!((err(0.3, 0.5, 16) - 0.159375).abs() < 1e-12);
    assert_eq!(err(0.3, 0.5, 1), 0.3);
    assert_eq!(err(0.3, 1.0, 64), 0.3);
}

/// Mean of `B` unit-variance draws sharing correlation `rho`, scaled to variance `e`.
#[test]
fn monte_carlo_agrees() {
    let (e, rho, b) = (0.3f64, 0.5f64, 16usize);
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let trials = 200_000;
    let mut sum_sq = 0.0;
    for _ in 0..trials {
        let shared: f64 = StandardNormal.sample(&mut rng);
        let mut mean = 0.0;
        for _ in 0..b {
            let own: f64 = StandardNormal.sample(&mut rng);
            mean += (rho.sqrt() * shared + (1.0 - rho).sqrt() * own) * e.sqrt();
        }
        mean /= b as f64;
        sum_sq += mean * mean;
    }
    let mc = sum_sq / trials as f64;
    assert!((mc - 0.159375).abs() < 0.003, "{mc}");
}

#[test]
fn invalid_parameters() {
    for (e, rho, b) in [
        (-0.1, 0.5, 4),
        (0.3, 1.5, 4),
        (0.3, -0.1, 4),
        (0.3, 0.5, 0),
        (f64::NAN, 0.5, 4),
    ] {
        assert!(ensemble_error(&EnsembleErrorParams { e_model: e, rho, b }).is_err());
    }
}

proptest! {
    #[test]
    fn non_increasing_in_b(e in 0.0f64..10.0, rho in 0.0f64..=1.0, k in 0u32..30) {
        let small = err(e, rho, 1 << k);
        let large = err(e, rho, 1 << (k + 1));
        prop_assert!(large <= small + 1e-15);
        prop_assert!(large >= rho * e - 1e-12);
        prop_assert!(small <= e + 1e-12);
    }
}
