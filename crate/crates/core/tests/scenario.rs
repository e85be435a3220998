mod common;

use clamp::model::simulate_all;
use clamp::scenario::{generate, sample_curriculum, sample_params, ScenarioSpec};
use clamp::{loss, MIN_DIFFICULTY};
use common::surjections;

const DRAWS: u64 = 10_000;

#[test]
fn samples_lie_in_their_ranges() {
    for seed in 0..200 {
        let p = sample_params(&ScenarioSpec::with_seed(seed)).unwrap();
        assert!(p.tasks.transfer.iter().flatten().all(|a| (-1.0..=1.0).contains(a)));
        assert!(p.tasks.difficulty.iter().all(|d| (MIN_DIFFICULTY..=1.0).contains(d)));
        for a in &p.algorithms {
            for v in [a.transfer_efficiency, a.experience_retention, a.expertise_translation] {
                assert!((0.0..=1.0).contains(&v));
            }
        }
        assert!(p.is_feasible());
    }
}

#[test]
fn transfer_entries_are_centred() {
    // U[-1, 1] has variance 1/3, so the sample mean has standard error
    // sqrt(1 / (3 * DRAWS)).
    let n = 5;
    let mut sums = vec![0.0; n * n];
    for seed in 0..DRAWS {
        let p = sample_params(&ScenarioSpec::with_seed(seed)).unwrap();
        for (s, a) in sums.iter_mut().zip(p.tasks.transfer.iter().flatten()) {
            *s += a;
        }
    }
    let sigma = (1.0 / (3.0 * DRAWS as f64)).sqrt();
    for (k, s) in sums.iter().enumerate() {
        let mean = s / DRAWS as f64;
        assert!(mean.abs() <= 3.0 * sigma, "entry {k}: mean {mean}");
    }
}

#[test]
fn absent_task_rate_matches_surjection_count() {
    let spec = ScenarioSpec::default();
    let exact = 1.0 - surjections(9, 5) / 5f64.powi(9);
    assert!((surjections(9, 5) - 834_120.0).abs() < 1e-6);
    let mut absent = 0u64;
    for seed in 0..DRAWS {
        let c = sample_curriculum(&ScenarioSpec { seed, ..spec.clone() }).unwrap();
        assert_eq!(c.len(), 9);
        assert!(c.entries().iter().all(|&e| e < 5));
        if (0..5).any(|t| c.phases_of(t) == 0) {
            absent += 1;
        }
    }
    let rate = absent as f64 / DRAWS as f64;
    let sigma = (exact * (1.0 - exact) / DRAWS as f64).sqrt();
    assert!((rate - exact).abs() <= 3.0 * sigma, "rate {rate}, exact {exact}");
}

#[test]
fn noiseless_data_is_a_fixed_point() {
    for seed in 0..20 {
        let s = generate(&ScenarioSpec::with_seed(seed)).unwrap();
        assert_eq!(s.data, simulate_all(&s.params, &s.curriculum).unwrap());
        assert_eq!(loss(&s.params, &s.curriculum, &s.data).unwrap(), 0.0);
        assert!(s.data.iter().all(|m| m.observed_count() == 5 * 9));
        assert_eq!(s.curriculum, sample_curriculum(&ScenarioSpec::with_seed(seed)).unwrap());
    }
}

#[test]
fn equal_seeds_reproduce_the_scenario() {
    let spec = ScenarioSpec {
        noise_std: 0.1,
        ..ScenarioSpec::with_seed(77)
    };
    assert_eq!(generate(&spec).unwrap(), generate(&spec).unwrap());
}

#[test]
fn noise_has_the_requested_spread() {
    let mut residuals = Vec::new();
    for seed in 0..400 {
        let spec = ScenarioSpec {
            noise_std: 0.05,
            ..ScenarioSpec::with_seed(seed)
        };
        let s = generate(&spec).unwrap();
        let clean = simulate_all(&s.params, &s.curriculum).unwrap();
        for (noisy, exact) in s.data.iter().zip(&clean) {
            for (a, b) in noisy.values.iter().flatten().zip(exact.values.iter().flatten()) {
                assert!(a.abs() < 1.0);
                residuals.push(a - b);
            }
        }
    }
    let n = residuals.len() as f64;
    let mean = residuals.iter().sum::<f64>() / n;
    let std = (residuals.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    assert!((0.04..=0.06).contains(&std), "std {std}");
}

#[test]
fn invalid_specs_are_rejected() {
    for spec in [
        ScenarioSpec { n_tasks: 0, ..ScenarioSpec::default() },
        ScenarioSpec { n_algos: 0, ..ScenarioSpec::default() },
        ScenarioSpec { curriculum_len: 0, ..ScenarioSpec::default() },
        ScenarioSpec { noise_std: -0.1, ..ScenarioSpec::default() },
    ] {
        assert!(generate(&spec).is_err());
    }
}
