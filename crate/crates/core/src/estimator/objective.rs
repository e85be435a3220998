//! Squared-error objective and its exact gradient.
//!
//! The gradient is a hand-written adjoint of the unrolled recurrence. With
//! `x = E / d` and `P = tanh(x / 2)` we have `dP/dx = (1 - P^2) / 2`, which
//! never overflows even when `x` is large.

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::model::{
    check_curriculum, rollout, AlgorithmProperties, Curriculum, PerformanceMatrix, ScenarioParams,
    TaskProperties, Trajectory,
};

use super::layout::Layout;

/// Partial derivatives of the loss, shaped like [`ScenarioParams`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    pub transfer: Vec<Vec<f64>>,
    pub difficulty: Vec<f64>,
    pub algorithms: Vec<AlgorithmGradient>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AlgorithmGradient {
    pub gamma: f64,
    pub h: f64,
    pub lambda: f64,
}

impl Gradient {
    pub fn norm_sq(&self) -> f64 {
        self.transfer.iter().flatten().map(|g| g * g).sum::<f64>()
            + self.difficulty.iter().map(|g| g * g).sum::<f64>()
            + self
                .algorithms
                .iter()
                .map(|a| a.gamma * a.gamma + a.h * a.h + a.lambda * a.lambda)
                .sum::<f64>()
    }

    pub(crate) fn from_flat(layout: Layout, flat: &[f64]) -> Self {
        let n = layout.n;
        Self {
            transfer: flat[..n * n].chunks(n).map(<[f64]>::to_vec).collect(),
            difficulty: flat[n * n..n * n + n].to_vec(),
            algorithms: (0..layout.p)
                .map(|a| {
                    let b = layout.algorithm(a);
                    AlgorithmGradient {
                        gamma: flat[b],
                        h: flat[b + 1],
                        lambda: flat[b + 2],
                    }
                })
                .collect(),
        }
    }
}

pub(crate) fn check_observed(
    params: &ScenarioParams,
    curriculum: &Curriculum,
    observed: &[PerformanceMatrix],
) -> Result<()> {
    check_curriculum(params, curriculum)?;
    if observed.len() != params.n_algorithms() {
        return Err(Error::shape(format!(
            "{} observed matrices for {} algorithms",
            observed.len(),
            params.n_algorithms()
        )));
    }
    let (n, m) = (params.n_tasks(), curriculum.len());
    for (obs, algo) in observed.iter().zip(&params.algorithms) {
        obs.check_shape(n, m)?;
        if obs.algorithm != algo.name {
            return Err(Error::shape(format!(
                "observed matrix `{}` paired with algorithm `{}`",
                obs.algorithm, algo.name
            )));
        }
    }
    if observed.iter().all(|o| o.observed_count() == 0) {
        return Err(Error::invalid("no observed entries to fit"));
    }
    Ok(())
}

/// Sum over algorithms of squared residuals on observed entries.
pub fn loss(
    params: &ScenarioParams,
    curriculum: &Curriculum,
    observed: &[PerformanceMatrix],
) -> Result<f64> {
    check_observed(params, curriculum, observed)?;
    Ok(per_algorithm_sse(params, curriculum, observed).iter().sum())
}

pub(crate) fn per_algorithm_sse(
    params: &ScenarioParams,
    curriculum: &Curriculum,
    observed: &[PerformanceMatrix],
) -> Vec<f64> {
    params
        .algorithms
        .iter()
        .zip(observed)
        .map(|(algo, obs)| trajectory_sse(&rollout(&params.tasks, algo, curriculum.entries()), obs))
        .collect()
}

/// Forward-order squared residual sum, shared by loss and gradient paths so
/// both report bit-identical objective values.
fn trajectory_sse(traj: &Trajectory, obs: &PerformanceMatrix) -> f64 {
    let n = traj.n_tasks;
    let mut sse = 0.0;
    for l in 0..traj.n_steps {
        for j in 0..n {
            if obs.mask[j][l] {
                let r = traj.performance[(l + 1) * n + j] - obs.values[j][l];
                sse += r * r;
            }
        }
    }
    sse
}

/// Exact gradient of [`loss`].
pub fn gradient(
    params: &ScenarioParams,
    curriculum: &Curriculum,
    observed: &[PerformanceMatrix],
) -> Result<Gradient> {
    loss_and_gradient(params, curriculum, observed, Execution::Sequential).map(|(_, g)| g)
}

pub fn loss_and_gradient(
    params: &ScenarioParams,
    curriculum: &Curriculum,
    observed: &[PerformanceMatrix],
    exec: Execution,
) -> Result<(f64, Gradient)> {
    check_observed(params, curriculum, observed)?;
    let layout = Layout::of(params);
    let mut flat = vec![0.0; layout.len()];
    let loss = accumulate_flat(params, curriculum.entries(), observed, exec, &mut flat);
    Ok((loss, Gradient::from_flat(layout, &flat)))
}

/// Unchecked evaluation writing the flat gradient into `out` (zeroed here).
/// Per-algorithm contributions are reduced in algorithm order.
pub(crate) fn accumulate_flat(
    params: &ScenarioParams,
    curriculum: &[usize],
    observed: &[PerformanceMatrix],
    exec: Execution,
    out: &mut [f64],
) -> f64 {
    let layout = Layout::of(params);
    let n = layout.n;
    out.iter_mut().for_each(|g| *g = 0.0);
    let pairs: Vec<(&AlgorithmProperties, &PerformanceMatrix)> =
        params.algorithms.iter().zip(observed).collect();
    let parts = exec.map(&pairs, |(algo, obs)| {
        algorithm_adjoint(&params.tasks, algo, curriculum, obs)
    });
    let mut total = 0.0;
    for (a, part) in parts.into_iter().enumerate() {
        total += part.loss;
        for (g, s) in out[..n * n + n].iter_mut().zip(&part.shared) {
            *g += s;
        }
        let b = layout.algorithm(a);
        out[b] = part.gamma;
        out[b + 1] = part.h;
        out[b + 2] = part.lambda;
    }
    total
}

struct AdjointPart {
    loss: f64,
    /// Transfer (row-major) then difficulty.
    shared: Vec<f64>,
    gamma: f64,
    h: f64,
    lambda: f64,
}

fn algorithm_adjoint(
    tasks: &TaskProperties,
    algo: &AlgorithmProperties,
    curriculum: &[usize],
    obs: &PerformanceMatrix,
) -> AdjointPart {
    let traj = rollout(tasks, algo, curriculum);
    let n = traj.n_tasks;
    let m = traj.n_steps;
    let gamma = algo.transfer_efficiency;
    let h = algo.experience_retention;
    let lambda = algo.expertise_translation;

    let mut shared = vec![0.0; n * n + n];
    let (g_transfer, g_difficulty) = shared.split_at_mut(n * n);
    let (mut g_gamma, mut g_h, mut g_lambda) = (0.0, 0.0, 0.0);

    // Adjoint of the experience state one step ahead of the current one.
    let mut g_next = vec![0.0; n];
    let mut g_cur = vec![0.0; n];
    // Adjoint flowing into the trained task's performance through the
    // lambda term of the following step.
    let mut carry: Option<(usize, f64)> = None;

    for l in (0..m).rev() {
        let i = curriculum[l];
        let e_prev = traj.experience_at(l);
        let e_cur = traj.experience_at(l + 1);
        let p_cur = traj.performance_at(l + 1);
        let p_trained_prev = traj.performance[l * n + i];

        for j in 0..n {
            let mut g_p = 0.0;
            if obs.mask[j][l] {
                g_p = 2.0 * (p_cur[j] - obs.values[j][l]);
            }
            if let Some((task, g)) = carry {
                if task == j {
                    g_p += g;
                }
            }
            let d = tasks.difficulty[j];
            let g_x = g_p * 0.5 * (1.0 - p_cur[j] * p_cur[j]);
            g_cur[j] = g_x / d + h * g_next[j];
            g_difficulty[j] -= g_x * e_cur[j] / (d * d);
        }

        let gain = gamma + lambda * p_trained_prev;
        let row = &tasks.transfer[i];
        let mut seen_by_gain = 0.0;
        for j in 0..n {
            g_transfer[i * n + j] += g_cur[j] * gain;
            g_h += g_cur[j] * e_prev[j];
            seen_by_gain += g_cur[j] * row[j];
        }
        g_gamma += seen_by_gain;
        g_lambda += seen_by_gain * p_trained_prev;
        carry = Some((i, lambda * seen_by_gain));
        std::mem::swap(&mut g_next, &mut g_cur);
    }

    AdjointPart {
        loss: trajectory_sse(&traj, obs),
        shared,
        gamma: g_gamma,
        h: g_h,
        lambda: g_lambda,
    }
}
