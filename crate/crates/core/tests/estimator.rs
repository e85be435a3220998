use clamp::estimator::{
    fit_from, fit_per_algorithm, fit_with_callback, fit_with_restarts, initial_params,
    parameter_errors, recovery_experiment, RecoveryConfig,
};
use clamp::model::simulate_all;
use clamp::scenario::{generate, ScenarioSpec};
use clamp::{fit, project, Error, Execution, FitConfig, InitScheme, ScenarioParams};

fn short(steps: usize) -> FitConfig {
    FitConfig {
        steps,
        ..FitConfig::default()
    }
}

#[test]
fn defaults_mirror_the_paper_optimiser() {
    let c = FitConfig::default();
    assert_eq!(c.steps, 1000);
    assert_eq!(c.learning_rate, 1e-3);
    assert_eq!((c.beta1, c.beta2, c.epsilon), (0.9, 0.999, 1e-8));
    assert_eq!(c.init_scheme, InitScheme::UniformRandom);
}

#[test]
fn equal_seeds_give_identical_results() {
    let s = generate(&ScenarioSpec::with_seed(4)).unwrap();
    let cfg = FitConfig {
        seed: 9,
        ..short(150)
    };
    let a = fit(&s.curriculum, &s.data, &cfg).unwrap();
    let b = fit(&s.curriculum, &s.data, &cfg).unwrap();
    assert_eq!(a, b);
    let other = fit(&s.curriculum, &s.data, &FitConfig { seed: 10, ..cfg }).unwrap();
    assert_ne!(a.params, other.params);
}

#[test]
fn zero_steps_return_projected_initialisation() {
    let s = generate(&ScenarioSpec::with_seed(5)).unwrap();
    for scheme in [InitScheme::UniformRandom, InitScheme::IdentityBiased] {
        let cfg = FitConfig {
            seed: 3,
            init_scheme: scheme,
            ..short(0)
        };
        let r = fit(&s.curriculum, &s.data, &cfg).unwrap();
        let names: Vec<String> = s.data.iter().map(|m| m.algorithm.clone()).collect();
        assert_eq!(r.params, initial_params(5, &names, scheme, 3));
        assert_eq!(r.loss_trace.len(), 1);
    }
}

#[test]
fn identity_biased_init_has_unit_diagonal() {
    let names = vec!["a".to_string()];
    let p = initial_params(4, &names, InitScheme::IdentityBiased, 0);
    for i in 0..4 {
        assert_eq!(p.tasks.transfer[i][i], 1.0);
    }
    assert!(p.is_feasible());
}

#[test]
fn start_at_optimum_stays_there() {
    let s = generate(&ScenarioSpec::with_seed(6)).unwrap();
    let r = fit_from(&s.curriculum, &s.data, &FitConfig::default(), &s.params).unwrap();
    assert_eq!(r.loss_total, 0.0);
    assert_eq!(r.params, s.params);
    assert_eq!(r.loss_trace.len(), 1001);
    let e = parameter_errors(&s.params, &r.params).unwrap();
    assert_eq!(e.as_array(), [0.0; 5]);
}

#[test]
fn final_loss_does_not_exceed_initial() {
    for seed in 0..5 {
        let s = generate(&ScenarioSpec::with_seed(seed)).unwrap();
        let r = fit(&s.curriculum, &s.data, &short(300)).unwrap();
        assert!(r.loss_trace.last() <= r.loss_trace.first());
        assert!(r.params.is_feasible());
        assert!(r.loss_total >= 0.0);
    }
}

#[test]
fn projection_examples() {
    let s = generate(&ScenarioSpec::with_seed(7)).unwrap();
    let mut p = s.params.clone();
    p.tasks.transfer[0][1] = 1.7;
    p.tasks.difficulty[2] = -4.0;
    p.algorithms[0].experience_retention = -0.2;
    p.algorithms[1].experience_retention = 0.35;
    p.algorithms[2].expertise_translation = -1.0;
    let q = project(&p);
    assert_eq!(q.tasks.transfer[0][1], 1.0);
    assert_eq!(q.tasks.difficulty[2], clamp::MIN_DIFFICULTY);
    assert_eq!(q.algorithms[0].experience_retention, 0.0);
    assert_eq!(q.algorithms[1].experience_retention, 0.35);
    assert_eq!(q.algorithms[2].expertise_translation, 0.0);
    assert_eq!(project(&q), q);
}

#[test]
fn every_step_is_feasible() {
    let s = generate(&ScenarioSpec::with_seed(8)).unwrap();
    let cfg = FitConfig {
        learning_rate: 0.05,
        ..short(400)
    };
    let mut seen = 0;
    fit_with_callback(&s.curriculum, &s.data, &cfg, None, |info| {
        assert!(info.feasible, "step {}", info.step);
        assert_eq!(info.step, seen);
        seen += 1;
    })
    .unwrap();
    assert_eq!(seen, 401);
}

#[test]
fn relabelling_tasks_leaves_errors_unchanged() {
    let s = generate(&ScenarioSpec::with_seed(12)).unwrap();
    let perm = [3, 0, 4, 1, 2];
    let names: Vec<String> = s.data.iter().map(|m| m.algorithm.clone()).collect();
    let init = initial_params(5, &names, InitScheme::UniformRandom, 12);
    let cfg = short(200);

    let base = fit_from(&s.curriculum, &s.data, &cfg, &init).unwrap();
    let data: Vec<_> = s.data.iter().map(|m| m.permuted(&perm).unwrap()).collect();
    let relabelled = fit_from(
        &s.curriculum.permuted(&perm).unwrap(),
        &data,
        &cfg,
        &init.permuted(&perm).unwrap(),
    )
    .unwrap();

    let e0 = parameter_errors(&s.params, &base.params).unwrap();
    let e1 = parameter_errors(&s.params.permuted(&perm).unwrap(), &relabelled.params).unwrap();
    for (a, b) in e0.as_array().iter().zip(e1.as_array()) {
        assert!((a - b).abs() <= 1e-9 * a.max(1e-12), "{a} vs {b}");
    }
}

#[test]
fn restarts_keep_the_best_run() {
    let s = generate(&ScenarioSpec::with_seed(13)).unwrap();
    let cfg = short(100);
    let best = fit_with_restarts(&s.curriculum, &s.data, &cfg, 4, Execution::Parallel).unwrap();
    let singles: Vec<f64> = (0..4)
        .map(|r| {
            let c = FitConfig {
                seed: r,
                ..cfg.clone()
            };
            fit(&s.curriculum, &s.data, &c).unwrap().loss_total
        })
        .collect();
    let min = singles.iter().copied().fold(f64::INFINITY, f64::min);
    assert_eq!(best.loss_total, min);
    let seq = fit_with_restarts(&s.curriculum, &s.data, &cfg, 4, Execution::Sequential).unwrap();
    assert_eq!(best, seq);
}

#[test]
fn per_algorithm_fits_are_independent() {
    let s = generate(&ScenarioSpec::with_seed(14)).unwrap();
    let cfg = short(50);
    let all = fit_per_algorithm(&s.curriculum, &s.data, &cfg, Execution::Parallel).unwrap();
    assert_eq!(all.len(), 3);
    for (r, obs) in all.iter().zip(&s.data) {
        let alone = fit(&s.curriculum, std::slice::from_ref(obs), &cfg).unwrap();
        assert_eq!(r, &alone);
        assert_eq!(r.params.algorithms[0].name, obs.algorithm);
    }
}

#[test]
fn recovery_at_truth_is_exact() {
    let cfg = RecoveryConfig {
        trials: 1,
        init_at_truth: true,
        fit: short(20),
        ..RecoveryConfig::default()
    };
    let summary = recovery_experiment(&cfg).unwrap();
    assert_eq!(summary.mean.as_array(), [0.0; 5]);
    assert!(summary.failed.is_empty());
}

#[test]
fn recovery_does_not_depend_on_execution() {
    let base = RecoveryConfig {
        trials: 4,
        seed: 30,
        fit: short(60),
        ..RecoveryConfig::default()
    };
    let par = recovery_experiment(&base).unwrap();
    let seq = recovery_experiment(&RecoveryConfig {
        execution: Execution::Sequential,
        ..base
    })
    .unwrap();
    assert_eq!(par, seq);
}

#[test]
fn divergence_names_step_and_parameter() {
    let mut s = generate(&ScenarioSpec::with_seed(15)).unwrap();
    s.data[1].values[2][3] = f64::INFINITY;
    match fit(&s.curriculum, &s.data, &short(50)) {
        Err(Error::Diverged { step, parameter }) => {
            assert_eq!(step, 0);
            assert!(!parameter.is_empty());
        }
        other => panic!("expected divergence, got {other:?}"),
    }
}

#[test]
fn invalid_inputs_are_rejected() {
    let s = generate(&ScenarioSpec::with_seed(16)).unwrap();
    let bad = FitConfig {
        learning_rate: -1.0,
        ..FitConfig::default()
    };
    assert!(fit(&s.curriculum, &s.data, &bad).is_err());
    assert!(fit(&s.curriculum, &[], &FitConfig::default()).is_err());
    let wrong: ScenarioParams = generate(&ScenarioSpec {
        n_tasks: 4,
        ..ScenarioSpec::default()
    })
    .unwrap()
    .params;
    assert!(fit_from(&s.curriculum, &s.data, &short(1), &wrong).is_err());
    let other = generate(&ScenarioSpec {
        n_tasks: 4,
        ..ScenarioSpec::default()
    })
    .unwrap();
    let data = simulate_all(&wrong, &other.curriculum).unwrap();
    assert!(fit(&s.curriculum, &data, &short(1)).is_err());
}
