use clamp::estimator::{fit_with_restarts, recovery_experiment, FitConfig, RecoveryConfig};
use clamp::model::simulate_all_with;
use clamp::scenario::{generate, ScenarioSpec};
use clamp::Execution;
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

const STRATEGIES: [(&str, Execution); 2] = [
    ("sequential", Execution::Sequential),
    ("parallel", Execution::Parallel),
];

fn bench_simulate_all(c: &mut Criterion) {
    let mut group = c.benchmark_group("simulate_all");
    for algos in [3, 32] {
        let s = generate(&ScenarioSpec {
            n_tasks: 20,
            n_algos: algos,
            curriculum_len: 200,
            ..ScenarioSpec::with_seed(1)
        })
        .unwrap();
        for (name, exec) in STRATEGIES {
            group.bench_with_input(BenchmarkId::new(name, algos), &s, |b, s| {
                b.iter(|| simulate_all_with(&s.params, &s.curriculum, exec).unwrap())
            });
        }
    }
    group.finish();
}

fn bench_restarts(c: &mut Criterion) {
    let mut group = c.benchmark_group("fit_restarts");
    group.sample_size(10);
    let s = generate(&ScenarioSpec::with_seed(2)).unwrap();
    let cfg = FitConfig {
        steps: 200,
        ..Default::default()
    };
    for (name, exec) in STRATEGIES {
        group.bench_function(name, |b| {
            b.iter(|| fit_with_restarts(&s.curriculum, &s.data, &cfg, 8, exec).unwrap())
        });
    }
    group.finish();
}

fn bench_recovery(c: &mut Criterion) {
    let mut group = c.benchmark_group("recovery_experiment");
    group.sample_size(10);
    for (name, exec) in STRATEGIES {
        let cfg = RecoveryConfig {
            trials: 8,
            fit: FitConfig {
                steps: 200,
                ..Default::default()
            },
            execution: exec,
            ..Default::default()
        };
        group.bench_function(name, |b| b.iter(|| recovery_experiment(&cfg).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, bench_simulate_all, bench_restarts, bench_recovery);
criterion_main!(benches);
