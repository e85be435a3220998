//! Domain types and the forward surrogate model.
//!
//! Experience on every task starts at zero. Each curriculum step that trains
//! task `i` updates every task `j` by
//!
//! ```text
//! E_j <- h * E_j + A[i][j] * (gamma + lambda * P_i)
//! ```
//!
//! where `P_i` is the performance of the trained task before the update, and
//! performance is read out as `P_j = 2 / (1 + exp(-E_j / d_j)) - 1`.

use std::collections::HashSet;

use crate::error::{Error, Result};
use crate::exec::Execution;

/// Lower bound on task difficulty. Difficulty divides experience inside the
/// sigmoid so it must stay strictly positive.
pub const MIN_DIFFICULTY: f64 = 1e-3;

/// Ordered, unique task identifiers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaskSet {
    names: Vec<String>,
}

impl TaskSet {
    pub fn new<S: Into<String>>(names: impl IntoIterator<Item = S>) -> Result<Self> {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        if names.is_empty() {
            return Err(Error::invalid("task set must contain at least one task"));
        }
        let mut seen = HashSet::new();
        for name in &names {
            if name.is_empty() {
                return Err(Error::invalid("task names must be non-empty"));
            }
            if !seen.insert(name.as_str()) {
                return Err(Error::invalid(format!("duplicate task name `{name}`")));
            }
        }
        Ok(Self { names })
    }

    /// Tasks named `task_1 .. task_n`.
    pub fn numbered(n: usize) -> Result<Self> {
        Self::new((1..=n).map(|i| format!("task_{i}")))
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, index: usize) -> &str {
        &self.names[index]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }
}

/// Sequence of trained task indices, one per curriculum step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Curriculum {
    entries: Vec<usize>,
    n_tasks: usize,
}

impl Curriculum {
    pub fn new(entries: Vec<usize>, n_tasks: usize) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::invalid("curriculum must have at least one entry"));
        }
        if let Some((pos, &bad)) = entries.iter().enumerate().find(|(_, &e)| e >= n_tasks) {
            return Err(Error::invalid(format!(
                "curriculum entry {pos} references task {bad} but only {n_tasks} tasks exist"
            )));
        }
        Ok(Self { entries, n_tasks })
    }

    pub fn entries(&self) -> &[usize] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn n_tasks(&self) -> usize {
        self.n_tasks
    }

    /// Number of curriculum steps that train `task`.
    pub fn phases_of(&self, task: usize) -> usize {
        self.entries.iter().filter(|&&e| e == task).count()
    }

    /// Relabels tasks: old index `i` becomes `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        check_permutation(perm, self.n_tasks)?;
        Self::new(self.entries.iter().map(|&e| perm[e]).collect(), self.n_tasks)
    }
}

/// Algorithm-independent task structure: transfer matrix and difficulty.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskProperties {
    /// `transfer[i][j]`: effect of training task `i` on experience of task `j`.
    pub transfer: Vec<Vec<f64>>,
    pub difficulty: Vec<f64>,
}

impl TaskProperties {
    /// Identity transfer with unit difficulty.
    pub fn identity(n: usize) -> Self {
        let transfer = (0..n)
            .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        Self {
            transfer,
            difficulty: vec![1.0; n],
        }
    }

    pub fn n_tasks(&self) -> usize {
        self.difficulty.len()
    }

    pub fn check_shape(&self) -> Result<()> {
        let n = self.difficulty.len();
        if n == 0 {
            return Err(Error::shape("task properties describe zero tasks"));
        }
        if self.transfer.len() != n || self.transfer.iter().any(|row| row.len() != n) {
            return Err(Error::shape(format!(
                "transfer matrix must be {n}x{n} to match {n} difficulty entries"
            )));
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.check_shape()?;
        for (i, row) in self.transfer.iter().enumerate() {
            for (j, &a) in row.iter().enumerate() {
                if !(-1.0..=1.0).contains(&a) {
                    return Err(Error::invalid(format!(
                        "transfer[{i}][{j}] = {a} outside [-1, 1]"
                    )));
                }
            }
        }
        for (j, &d) in self.difficulty.iter().enumerate() {
            if !d.is_finite() || d < MIN_DIFFICULTY {
                return Err(Error::invalid(format!(
                    "difficulty[{j}] = {d} below minimum {MIN_DIFFICULTY}"
                )));
            }
        }
        Ok(())
    }
}

/// Per-algorithm latent scores.
#[derive(Debug, Clone, PartialEq)]
pub struct AlgorithmProperties {
    pub name: String,
    /// Additive experience gain per training step (gamma).
    pub transfer_efficiency: f64,
    /// Multiplicative retention of all experience per step (h).
    pub experience_retention: f64,
    /// Gain from current trained-task performance into experience (lambda).
    pub expertise_translation: f64,
}

impl AlgorithmProperties {
    pub fn new(name: impl Into<String>, gamma: f64, h: f64, lambda: f64) -> Self {
        Self {
            name: name.into(),
            transfer_efficiency: gamma,
            experience_retention: h,
            expertise_translation: lambda,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v.is_finite();
        if !ok(self.transfer_efficiency) || self.transfer_efficiency < 0.0 {
            return Err(Error::invalid(format!(
                "{}: gamma = {} must be >= 0",
                self.name, self.transfer_efficiency
            )));
        }
        if !ok(self.expertise_translation) || self.expertise_translation < 0.0 {
            return Err(Error::invalid(format!(
                "{}: lambda = {} must be >= 0",
                self.name, self.expertise_translation
            )));
        }
        if !(0.0..=1.0).contains(&self.experience_retention) {
            return Err(Error::invalid(format!(
                "{}: h = {} must lie in [0, 1]",
                self.name, self.experience_retention
            )));
        }
        Ok(())
    }
}

/// The full latent parameter set: shared task properties plus one entry per
/// algorithm.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioParams {
    pub tasks: TaskProperties,
    pub algorithms: Vec<AlgorithmProperties>,
}

impl ScenarioParams {
    pub fn n_tasks(&self) -> usize {
        self.tasks.n_tasks()
    }

    pub fn n_algorithms(&self) -> usize {
        self.algorithms.len()
    }

    pub fn check_shape(&self) -> Result<()> {
        self.tasks.check_shape()?;
        if self.algorithms.is_empty() {
            return Err(Error::shape("at least one algorithm is required"));
        }
        Ok(())
    }

    /// Full invariant check: shapes plus every box constraint.
    pub fn validate(&self) -> Result<()> {
        self.check_shape()?;
        self.tasks.validate()?;
        self.algorithms.iter().try_for_each(AlgorithmProperties::validate)
    }

    pub fn is_feasible(&self) -> bool {
        self.validate().is_ok()
    }

    /// Relabels tasks: old index `i` becomes `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        let n = self.n_tasks();
        check_permutation(perm, n)?;
        let mut transfer = vec![vec![0.0; n]; n];
        let mut difficulty = vec![0.0; n];
        for i in 0..n {
            difficulty[perm[i]] = self.tasks.difficulty[i];
            for j in 0..n {
                transfer[perm[i]][perm[j]] = self.tasks.transfer[i][j];
            }
        }
        Ok(Self {
            tasks: TaskProperties {
                transfer,
                difficulty,
            },
            algorithms: self.algorithms.clone(),
        })
    }
}

/// Accumulated experience per task after `step` curriculum entries.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperienceState {
    pub experience: Vec<f64>,
    pub step: usize,
}

impl ExperienceState {
    pub fn initial(n_tasks: usize) -> Self {
        Self {
            experience: vec![0.0; n_tasks],
            step: 0,
        }
    }

    pub fn performance(&self, tasks: &TaskProperties) -> Result<Vec<f64>> {
        self.experience
            .iter()
            .zip(&tasks.difficulty)
            .map(|(&e, &d)| performance_map(e, d))
            .collect()
    }
}

/// Observed or predicted curves for one algorithm: `values[task][step]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PerformanceMatrix {
    pub algorithm: String,
    pub values: Vec<Vec<f64>>,
    /// `true` where the entry is observed.
    pub mask: Vec<Vec<bool>>,
}

impl PerformanceMatrix {
    /// Fully observed matrix.
    pub fn full(algorithm: impl Into<String>, values: Vec<Vec<f64>>) -> Self {
        let mask = values.iter().map(|r| vec![true; r.len()]).collect();
        Self {
            algorithm: algorithm.into(),
            values,
            mask,
        }
    }

    /// All entries unobserved.
    pub fn empty(algorithm: impl Into<String>, n_tasks: usize, n_steps: usize) -> Self {
        Self {
            algorithm: algorithm.into(),
            values: vec![vec![0.0; n_steps]; n_tasks],
            mask: vec![vec![false; n_steps]; n_tasks],
        }
    }

    pub fn n_tasks(&self) -> usize {
        self.values.len()
    }

    pub fn n_steps(&self) -> usize {
        self.values.first().map_or(0, Vec::len)
    }

    pub fn observed_count(&self) -> usize {
        self.mask.iter().flatten().filter(|&&m| m).count()
    }

    pub fn get(&self, task: usize, step: usize) -> Option<f64> {
        self.mask[task][step].then(|| self.values[task][step])
    }

    pub fn set(&mut self, task: usize, step: usize, value: f64) {
        self.values[task][step] = value;
        self.mask[task][step] = true;
    }

    pub fn check_shape(&self, n_tasks: usize, n_steps: usize) -> Result<()> {
        let rows_ok = self.values.len() == n_tasks && self.mask.len() == n_tasks;
        let cols_ok = self.values.iter().all(|r| r.len() == n_steps)
            && self.mask.iter().all(|r| r.len() == n_steps);
        if rows_ok && cols_ok {
            Ok(())
        } else {
            Err(Error::shape(format!(
                "performance matrix for `{}` must be {n_tasks}x{n_steps}",
                self.algorithm
            )))
        }
    }

    /// Relabels task rows: old index `i` becomes `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        check_permutation(perm, self.n_tasks())?;
        let mut out = self.clone();
        for (i, &p) in perm.iter().enumerate() {
            out.values[p] = self.values[i].clone();
            out.mask[p] = self.mask[i].clone();
        }
        Ok(out)
    }
}

fn check_permutation(perm: &[usize], n: usize) -> Result<()> {
    let mut seen = vec![false; n];
    if perm.len() != n {
        return Err(Error::invalid(format!("permutation must have {n} entries")));
    }
    for &p in perm {
        if p >= n || std::mem::replace(&mut seen[p], true) {
            return Err(Error::invalid("not a permutation"));
        }
    }
    Ok(())
}

/// Shifted sigmoid without argument checks. `2 S(x) - 1` equals `tanh(x / 2)`,
/// which stays accurate for large `|x|`.
#[inline]
pub(crate) fn shifted_sigmoid(x: f64) -> f64 {
    (0.5 * x).tanh()
}

/// Maps accumulated experience to performance in `(-1, 1)`.
pub fn performance_map(experience: f64, difficulty: f64) -> Result<f64> {
    if !experience.is_finite() || !difficulty.is_finite() {
        return Err(Error::invalid(format!(
            "performance_map requires finite inputs, got experience={experience}, difficulty={difficulty}"
        )));
    }
    if difficulty < MIN_DIFFICULTY {
        return Err(Error::invalid(format!(
            "difficulty {difficulty} below minimum {MIN_DIFFICULTY}"
        )));
    }
    Ok(shifted_sigmoid(experience / difficulty))
}

/// One curriculum step of the experience recurrence. The input state is not
/// modified.
pub fn experience_step(
    state: &ExperienceState,
    trained_task: usize,
    prev_performance_of_trained: f64,
    tasks: &TaskProperties,
    algo: &AlgorithmProperties,
) -> Result<ExperienceState> {
    let n = tasks.n_tasks();
    if trained_task >= n {
        return Err(Error::invalid(format!(
            "trained task {trained_task} out of range for {n} tasks"
        )));
    }
    if state.experience.len() != n {
        return Err(Error::shape(format!(
            "experience state has {} entries, expected {n}",
            state.experience.len()
        )));
    }
    if !prev_performance_of_trained.is_finite() {
        return Err(Error::invalid("previous performance must be finite"));
    }
    let gain = algo.transfer_efficiency + prev_performance_of_trained * algo.expertise_translation;
    let h = algo.experience_retention;
    let row = &tasks.transfer[trained_task];
    let experience = state
        .experience
        .iter()
        .zip(row)
        .map(|(&e, &a)| e * h + a * gain)
        .collect();
    Ok(ExperienceState {
        experience,
        step: state.step + 1,
    })
}

/// Full forward pass for one algorithm, keeping every intermediate state.
///
/// Row `l` (stored contiguously, `n` wide) of `experience`/`performance` is the
/// state after `l` curriculum steps; row 0 is the zero base case.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub n_tasks: usize,
    pub n_steps: usize,
    pub experience: Vec<f64>,
    pub performance: Vec<f64>,
}

impl Trajectory {
    pub fn experience_at(&self, step: usize) -> &[f64] {
        &self.experience[step * self.n_tasks..(step + 1) * self.n_tasks]
    }

    pub fn performance_at(&self, step: usize) -> &[f64] {
        &self.performance[step * self.n_tasks..(step + 1) * self.n_tasks]
    }

    pub fn to_matrix(&self, algorithm: &str) -> PerformanceMatrix {
        let values = (0..self.n_tasks)
            .map(|j| {
                (1..=self.n_steps)
                    .map(|l| self.performance[l * self.n_tasks + j])
                    .collect()
            })
            .collect();
        PerformanceMatrix::full(algorithm, values)
    }
}

/// Unchecked rollout. Callers guarantee shapes agree with the curriculum.
pub(crate) fn rollout(
    tasks: &TaskProperties,
    algo: &AlgorithmProperties,
    curriculum: &[usize],
) -> Trajectory {
    let n = tasks.n_tasks();
    let m = curriculum.len();
    let mut experience = vec![0.0; (m + 1) * n];
    let mut performance = vec![0.0; (m + 1) * n];
    let gamma = algo.transfer_efficiency;
    let h = algo.experience_retention;
    let lambda = algo.expertise_translation;
    for (l, &i) in curriculum.iter().enumerate() {
        let (prev, next) = experience.split_at_mut((l + 1) * n);
        let prev = &prev[l * n..];
        let next = &mut next[..n];
        let gain = gamma + performance[l * n + i] * lambda;
        let row = &tasks.transfer[i];
        for j in 0..n {
            next[j] = prev[j] * h + row[j] * gain;
        }
        let p = &mut performance[(l + 1) * n..(l + 2) * n];
        for j in 0..n {
            p[j] = shifted_sigmoid(next[j] / tasks.difficulty[j]);
        }
    }
    Trajectory {
        n_tasks: n,
        n_steps: m,
        experience,
        performance,
    }
}

pub(crate) fn check_curriculum(params: &ScenarioParams, curriculum: &Curriculum) -> Result<()> {
    params.check_shape()?;
    if curriculum.n_tasks() != params.n_tasks() {
        return Err(Error::shape(format!(
            "curriculum is defined over {} tasks but parameters describe {}",
            curriculum.n_tasks(),
            params.n_tasks()
        )));
    }
    Ok(())
}

/// Predicted curves for one algorithm. Column `l` is the performance after
/// `l + 1` curriculum steps.
pub fn simulate(
    params: &ScenarioParams,
    curriculum: &Curriculum,
    algo_index: usize,
) -> Result<PerformanceMatrix> {
    check_curriculum(params, curriculum)?;
    let algo = params.algorithms.get(algo_index).ok_or_else(|| {
        Error::invalid(format!(
            "algorithm index {algo_index} out of range for {} algorithms",
            params.n_algorithms()
        ))
    })?;
    Ok(rollout(&params.tasks, algo, curriculum.entries()).to_matrix(&algo.name))
}

/// [`simulate`] for every algorithm, in order.
pub fn simulate_all(params: &ScenarioParams, curriculum: &Curriculum) -> Result<Vec<PerformanceMatrix>> {
    simulate_all_with(params, curriculum, Execution::default())
}

pub fn simulate_all_with(
    params: &ScenarioParams,
    curriculum: &Curriculum,
    exec: Execution,
) -> Result<Vec<PerformanceMatrix>> {
    check_curriculum(params, curriculum)?;
    Ok(exec.map(&params.algorithms, |algo| {
        rollout(&params.tasks, algo, curriculum.entries()).to_matrix(&algo.name)
    }))
}
