//! Independent reference implementations shared by the integration tests.
//!
//! Nothing here calls into the library's numerics: the forward pass is a
//! literal scalar loop using `2 / (1 + exp(-x)) - 1`, and gradients come from
//! central differences of that loop.

#![allow(dead_code)]
#![allow(clippy::needless_range_loop)]

use clamp::{AlgorithmProperties, Curriculum, PerformanceMatrix, ScenarioParams, TaskProperties};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Predicted performance `[task][step]` for one algorithm.
pub fn oracle_forward(
    transfer: &[Vec<f64>],
    difficulty: &[f64],
    gamma: f64,
    h: f64,
    lambda: f64,
    curriculum: &[usize],
) -> Vec<Vec<f64>> {
    let n = difficulty.len();
    let mut e = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut out = vec![vec![0.0; curriculum.len()]; n];
    for (l, &i) in curriculum.iter().enumerate() {
        let prev = p[i];
        for j in 0..n {
            e[j] = h * e[j] + transfer[i][j] * (gamma + lambda * prev);
        }
        for j in 0..n {
            p[j] = 2.0 / (1.0 + (-e[j] / difficulty[j]).exp()) - 1.0;
            out[j][l] = p[j];
        }
    }
    out
}

pub fn oracle_simulate(params: &ScenarioParams, curriculum: &Curriculum) -> Vec<Vec<Vec<f64>>> {
    params
        .algorithms
        .iter()
        .map(|a| {
            oracle_forward(
                &params.tasks.transfer,
                &params.tasks.difficulty,
                a.transfer_efficiency,
                a.experience_retention,
                a.expertise_translation,
                curriculum.entries(),
            )
        })
        .collect()
}

/// Sum of squared residuals over observed entries.
pub fn oracle_loss(params: &ScenarioParams, curriculum: &Curriculum, observed: &[PerformanceMatrix]) -> f64 {
    let predicted = oracle_simulate(params, curriculum);
    let mut total = 0.0;
    for (pred, obs) in predicted.iter().zip(observed) {
        for j in 0..obs.n_tasks() {
            for l in 0..obs.n_steps() {
                if obs.mask[j][l] {
                    let r = pred[j][l] - obs.values[j][l];
                    total += r * r;
                }
            }
        }
    }
    total
}

/// Flat parameter vector in a fixed order: A row-major, d, then
/// (gamma, h, lambda) per algorithm.
pub fn to_flat(params: &ScenarioParams) -> Vec<f64> {
    let mut v: Vec<f64> = params.tasks.transfer.iter().flatten().copied().collect();
    v.extend(&params.tasks.difficulty);
    for a in &params.algorithms {
        v.extend([a.transfer_efficiency, a.experience_retention, a.expertise_translation]);
    }
    v
}

pub fn from_flat(template: &ScenarioParams, v: &[f64]) -> ScenarioParams {
    let n = template.n_tasks();
    let mut out = template.clone();
    for i in 0..n {
        out.tasks.transfer[i].copy_from_slice(&v[i * n..(i + 1) * n]);
    }
    out.tasks.difficulty.copy_from_slice(&v[n * n..n * n + n]);
    for (a, algo) in out.algorithms.iter_mut().enumerate() {
        let b = n * n + n + 3 * a;
        algo.transfer_efficiency = v[b];
        algo.experience_retention = v[b + 1];
        algo.expertise_translation = v[b + 2];
    }
    out
}

/// Central differences of [`oracle_loss`] in the [`to_flat`] order.
pub fn finite_difference_gradient(
    params: &ScenarioParams,
    curriculum: &Curriculum,
    observed: &[PerformanceMatrix],
    step: f64,
) -> Vec<f64> {
    let base = to_flat(params);
    (0..base.len())
        .map(|k| {
            let mut up = base.clone();
            let mut down = base.clone();
            up[k] += step;
            down[k] -= step;
            let fu = oracle_loss(&from_flat(params, &up), curriculum, observed);
            let fd = oracle_loss(&from_flat(params, &down), curriculum, observed);
            (fu - fd) / (2.0 * step)
        })
        .collect()
}

/// Random instance with the given size limits. Difficulties are drawn from
/// `d_range`.
pub fn random_instance(
    rng: &mut ChaCha8Rng,
    max_tasks: usize,
    max_steps: usize,
    max_algos: usize,
    d_range: (f64, f64),
) -> (ScenarioParams, Curriculum) {
    let n = rng.random_range(1..=max_tasks);
    let m = rng.random_range(1..=max_steps);
    let p = rng.random_range(1..=max_algos);
    let transfer = (0..n)
        .map(|_| (0..n).map(|_| rng.random_range(-1.0..=1.0)).collect())
        .collect();
    let difficulty = (0..n).map(|_| rng.random_range(d_range.0..=d_range.1)).collect();
    let algorithms = (0..p)
        .map(|a| {
            AlgorithmProperties::new(
                format!("a{a}"),
                rng.random_range(0.0..=1.0),
                rng.random_range(0.0..=1.0),
                rng.random_range(0.0..=2.0),
            )
        })
        .collect();
    let entries = (0..m).map(|_| rng.random_range(0..n)).collect();
    (
        ScenarioParams {
            tasks: TaskProperties {
                transfer,
                difficulty,
            },
            algorithms,
        },
        Curriculum::new(entries, n).unwrap(),
    )
}

/// Observations in `[0, 1]` with roughly a fifth of the cells masked out.
/// At least one cell per algorithm stays observed.
pub fn random_observations(
    rng: &mut ChaCha8Rng,
    params: &ScenarioParams,
    curriculum: &Curriculum,
) -> Vec<PerformanceMatrix> {
    let n = params.n_tasks();
    let m = curriculum.len();
    params
        .algorithms
        .iter()
        .map(|a| {
            let mut obs = PerformanceMatrix::empty(a.name.clone(), n, m);
            for j in 0..n {
                for l in 0..m {
                    if rng.random_bool(0.8) {
                        obs.set(j, l, rng.random_range(0.0..=1.0));
                    }
                }
            }
            if obs.observed_count() == 0 {
                obs.set(0, 0, 0.5);
            }
            obs
        })
        .collect()
}

/// Number of surjections from an `m`-set onto an `n`-set, by
/// inclusion-exclusion.
pub fn surjections(m: u32, n: u32) -> f64 {
    let mut total = 0.0;
    for k in 0..=n {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        total += sign * binomial(n, k) * f64::from(n - k).powi(m as i32);
    }
    total
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * f64::from(n - i) / f64::from(i + 1))
}
