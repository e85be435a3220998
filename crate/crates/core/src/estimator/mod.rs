//! Parameter estimation by projected Adam on the squared-error objective.

mod adam;
mod layout;
mod objective;
pub mod recovery;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::model::{
    simulate_all_with, AlgorithmProperties, Curriculum, PerformanceMatrix, ScenarioParams,
    TaskProperties, MIN_DIFFICULTY,
};

use adam::Adam;
use layout::Layout;
pub use objective::{gradient, loss, loss_and_gradient, AlgorithmGradient, Gradient};
pub use recovery::{
    parameter_errors, recovery_experiment, recovery_trial, ParameterErrors, RecoveryConfig,
    RecoverySummary, RecoveryThresholds, TrialOutcome,
};

/// RNG stream used for random initialisation. Scenario sampling uses stream 0
/// so equal seeds never produce an initialisation equal to the ground truth.
pub(crate) const INIT_STREAM: u64 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InitScheme {
    /// Every parameter drawn uniformly inside its box (`d`, `gamma`, `lambda`
    /// from `[0, 1]`).
    #[default]
    UniformRandom,
    /// As `UniformRandom` but with the transfer diagonal set to one.
    IdentityBiased,
}

impl std::str::FromStr for InitScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" | "uniform-random" => Ok(Self::UniformRandom),
            "identity-biased" | "identity" => Ok(Self::IdentityBiased),
            other => Err(Error::invalid(format!("unknown init scheme `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitConfig {
    pub steps: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub seed: u64,
    pub init_scheme: InitScheme,
    /// Strategy for the per-algorithm forward/adjoint passes inside one
    /// evaluation. Reduction order is fixed either way.
    pub execution: Execution,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            steps: 1000,
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            seed: 0,
            init_scheme: InitScheme::UniformRandom,
            execution: Execution::Sequential,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::invalid("learning rate must be positive"));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return Err(Error::invalid("beta1 and beta2 must lie in [0, 1)"));
        }
        if self.epsilon.is_nan() || self.epsilon <= 0.0 {
            return Err(Error::invalid("epsilon must be positive"));
        }
        Ok(())
    }
}

/// Reported after every evaluation, including the initial point (step 0).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepInfo {
    pub step: usize,
    /// Objective at the parameters after `step` updates.
    pub loss: f64,
    /// Whether those parameters satisfy every box constraint.
    pub feasible: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub params: ScenarioParams,
    pub predicted: Vec<PerformanceMatrix>,
    /// Final value of the raw objective (sum of squared residuals).
    pub loss_total: f64,
    /// Mean squared error over every observed entry of every algorithm.
    pub mse_total: f64,
    /// Mean squared error over the observed entries of each algorithm.
    pub loss_per_algorithm: Vec<(String, f64)>,
    /// Objective before the first update and after each update.
    pub loss_trace: Vec<f64>,
}

/// Clamps every parameter onto its feasible box. Idempotent.
pub fn project(params: &ScenarioParams) -> ScenarioParams {
    let mut out = params.clone();
    project_in_place(&mut out);
    out
}

fn project_in_place(params: &mut ScenarioParams) {
    for a in params.tasks.transfer.iter_mut().flatten() {
        *a = a.clamp(-1.0, 1.0);
    }
    for d in &mut params.tasks.difficulty {
        *d = d.max(MIN_DIFFICULTY);
    }
    for algo in &mut params.algorithms {
        algo.transfer_efficiency = algo.transfer_efficiency.max(0.0);
        algo.expertise_translation = algo.expertise_translation.max(0.0);
        algo.experience_retention = algo.experience_retention.clamp(0.0, 1.0);
    }
}

fn project_flat(layout: Layout, flat: &mut [f64]) {
    let n = layout.n;
    for a in &mut flat[..n * n] {
        *a = a.clamp(-1.0, 1.0);
    }
    for d in &mut flat[n * n..n * n + n] {
        *d = d.max(MIN_DIFFICULTY);
    }
    for a in 0..layout.p {
        let b = layout.algorithm(a);
        flat[b] = flat[b].max(0.0);
        flat[b + 1] = flat[b + 1].clamp(0.0, 1.0);
        flat[b + 2] = flat[b + 2].max(0.0);
    }
}

/// Seeded starting point for a fit, already projected.
pub fn initial_params(
    n_tasks: usize,
    algorithm_names: &[String],
    scheme: InitScheme,
    seed: u64,
) -> ScenarioParams {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(INIT_STREAM);
    let mut transfer: Vec<Vec<f64>> = (0..n_tasks)
        .map(|_| (0..n_tasks).map(|_| rng.random_range(-1.0..=1.0)).collect())
        .collect();
    let difficulty = (0..n_tasks).map(|_| rng.random_range(0.0..=1.0)).collect();
    let algorithms = algorithm_names
        .iter()
        .map(|name| {
            let g = rng.random_range(0.0..=1.0);
            let h = rng.random_range(0.0..=1.0);
            let l = rng.random_range(0.0..=1.0);
            AlgorithmProperties::new(name.clone(), g, h, l)
        })
        .collect();
    if scheme == InitScheme::IdentityBiased {
        for (i, row) in transfer.iter_mut().enumerate() {
            row[i] = 1.0;
        }
    }
    project(&ScenarioParams {
        tasks: TaskProperties {
            transfer,
            difficulty,
        },
        algorithms,
    })
}

/// Fits parameters from a seeded random initialisation.
pub fn fit(
    curriculum: &Curriculum,
    observed: &[PerformanceMatrix],
    config: &FitConfig,
) -> Result<FitResult> {
    fit_with_callback(curriculum, observed, config, None, |_| {})
}

/// Fits parameters starting from `initial` (projected first).
pub fn fit_from(
    curriculum: &Curriculum,
    observed: &[PerformanceMatrix],
    config: &FitConfig,
    initial: &ScenarioParams,
) -> Result<FitResult> {
    fit_with_callback(curriculum, observed, config, Some(initial), |_| {})
}

/// Full-control fit. `callback` sees every evaluated point, `steps + 1` calls
/// in total.
pub fn fit_with_callback(
    curriculum: &Curriculum,
    observed: &[PerformanceMatrix],
    config: &FitConfig,
    initial: Option<&ScenarioParams>,
    mut callback: impl FnMut(&StepInfo),
) -> Result<FitResult> {
    config.validate()?;
    if observed.is_empty() {
        return Err(Error::invalid("at least one observed matrix is required"));
    }
    let names: Vec<String> = observed.iter().map(|o| o.algorithm.clone()).collect();
    let start = match initial {
        Some(p) => {
            let mut p = project(p);
            if p.n_algorithms() != names.len() {
                return Err(Error::shape(format!(
                    "initial parameters have {} algorithms, data has {}",
                    p.n_algorithms(),
                    names.len()
                )));
            }
            for (algo, name) in p.algorithms.iter_mut().zip(&names) {
                algo.name.clone_from(name);
            }
            p
        }
        None => initial_params(curriculum.n_tasks(), &names, config.init_scheme, config.seed),
    };
    objective::check_observed(&start, curriculum, observed)?;

    let layout = Layout::of(&start);
    let mut flat = layout.flatten(&start);
    let mut grad = vec![0.0; layout.len()];
    let mut adam = Adam::new(
        layout.len(),
        config.learning_rate,
        config.beta1,
        config.beta2,
        config.epsilon,
    );
    let mut trace = Vec::with_capacity(config.steps + 1);
    let entries = curriculum.entries();

    let mut current = start;
    for step in 0..=config.steps {
        let value =
            objective::accumulate_flat(&current, entries, observed, config.execution, &mut grad);
        if !value.is_finite() {
            let culprit = grad
                .iter()
                .position(|g| !g.is_finite())
                .map_or_else(|| "loss".to_string(), |k| layout.describe(k, &names));
            return Err(Error::Diverged {
                step,
                parameter: culprit,
            });
        }
        trace.push(value);
        callback(&StepInfo {
            step,
            loss: value,
            feasible: current.is_feasible(),
        });
        if step == config.steps {
            break;
        }
        if let Some(k) = grad.iter().position(|g| !g.is_finite()) {
            return Err(Error::Diverged {
                step,
                parameter: layout.describe(k, &names),
            });
        }
        adam.step(&mut flat, &grad);
        project_flat(layout, &mut flat);
        if let Some(k) = flat.iter().position(|p| !p.is_finite()) {
            return Err(Error::Diverged {
                step: step + 1,
                parameter: layout.describe(k, &names),
            });
        }
        current = layout.unflatten(&flat, &names);
    }

    let loss_total = *trace.last().expect("trace holds the initial loss");
    Ok(summarise(current, curriculum, observed, loss_total, trace))
}

fn summarise(
    params: ScenarioParams,
    curriculum: &Curriculum,
    observed: &[PerformanceMatrix],
    loss_total: f64,
    loss_trace: Vec<f64>,
) -> FitResult {
    let sse = objective::per_algorithm_sse(&params, curriculum, observed);
    let counts: Vec<usize> = observed.iter().map(PerformanceMatrix::observed_count).collect();
    let loss_per_algorithm = observed
        .iter()
        .zip(sse.iter().zip(&counts))
        .map(|(o, (&s, &c))| (o.algorithm.clone(), if c == 0 { 0.0 } else { s / c as f64 }))
        .collect();
    let total_count: usize = counts.iter().sum();
    let mse_total = sse.iter().sum::<f64>() / total_count.max(1) as f64;
    let predicted = simulate_all_with(&params, curriculum, Execution::Sequential)
        .expect("shapes checked before fitting");
    FitResult {
        params,
        predicted,
        loss_total,
        mse_total,
        loss_per_algorithm,
        loss_trace,
    }
}

/// Runs `restarts` fits with seeds `seed, seed + 1, ...` and keeps the one with
/// the lowest final objective (earliest on ties). Fails only if every restart
/// fails, returning the first error.
pub fn fit_with_restarts(
    curriculum: &Curriculum,
    observed: &[PerformanceMatrix],
    config: &FitConfig,
    restarts: usize,
    exec: Execution,
) -> Result<FitResult> {
    let restarts = restarts.max(1);
    let runs = exec.map_range(restarts, |r| {
        let cfg = FitConfig {
            seed: config.seed.wrapping_add(r as u64),
            ..config.clone()
        };
        fit(curriculum, observed, &cfg)
    });
    let mut best: Option<FitResult> = None;
    let mut first_err = None;
    for run in runs {
        match run {
            Ok(r) => {
                if best.as_ref().is_none_or(|b| r.loss_total < b.loss_total) {
                    best = Some(r);
                }
            }
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    best.ok_or_else(|| first_err.expect("at least one restart ran"))
}

/// Fits every algorithm on its own, each with a private transfer matrix and
/// difficulty vector.
pub fn fit_per_algorithm(
    curriculum: &Curriculum,
    observed: &[PerformanceMatrix],
    config: &FitConfig,
    exec: Execution,
) -> Result<Vec<FitResult>> {
    exec.map(observed, |obs| fit(curriculum, std::slice::from_ref(obs), config))
        .into_iter()
        .collect()
}
