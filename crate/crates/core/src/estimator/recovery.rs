//! Synthetic identifiability check: sample ground truth, simulate, refit and
//! measure how far the estimates land from the truth.

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::model::{Curriculum, PerformanceMatrix, ScenarioParams};
use crate::scenario::{generate, ScenarioSpec};

use super::{fit, fit_from, fit_with_restarts, FitConfig};

/// Mean squared error between true and estimated values, per parameter group.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ParameterErrors {
    pub transfer: f64,
    pub difficulty: f64,
    pub gamma: f64,
    pub h: f64,
    pub lambda: f64,
}

impl ParameterErrors {
    pub fn as_array(&self) -> [f64; 5] {
        [self.transfer, self.difficulty, self.gamma, self.h, self.lambda]
    }

    fn from_array(v: [f64; 5]) -> Self {
        Self {
            transfer: v[0],
            difficulty: v[1],
            gamma: v[2],
            h: v[3],
            lambda: v[4],
        }
    }
}

/// Upper bounds for the averaged recovery errors: twice the errors reported
/// for the 5-task, 3-algorithm, length-9 synthetic setup.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecoveryThresholds(pub ParameterErrors);

impl RecoveryThresholds {
    /// Errors reported for the reference synthetic experiment.
    pub const REFERENCE: ParameterErrors = ParameterErrors {
        transfer: 0.12,
        difficulty: 0.04,
        gamma: 0.02,
        h: 0.0,
        lambda: 0.01,
    };

    pub fn passes(&self, errors: &ParameterErrors) -> [bool; 5] {
        let limit = self.0.as_array();
        let got = errors.as_array();
        std::array::from_fn(|k| got[k] <= limit[k])
    }

    pub fn all_pass(&self, errors: &ParameterErrors) -> bool {
        self.passes(errors).iter().all(|&ok| ok)
    }
}

impl Default for RecoveryThresholds {
    fn default() -> Self {
        Self(ParameterErrors {
            transfer: 0.24,
            difficulty: 0.08,
            gamma: 0.04,
            h: 0.02,
            lambda: 0.05,
        })
    }
}

fn mse<'a>(pairs: impl Iterator<Item = (&'a f64, &'a f64)>) -> f64 {
    let (sum, count) = pairs.fold((0.0, 0usize), |(s, c), (a, b)| (s + (a - b) * (a - b), c + 1));
    sum / count.max(1) as f64
}

pub fn parameter_errors(truth: &ScenarioParams, estimate: &ScenarioParams) -> Result<ParameterErrors> {
    if truth.n_tasks() != estimate.n_tasks() || truth.n_algorithms() != estimate.n_algorithms() {
        return Err(Error::shape("truth and estimate have different shapes"));
    }
    let algo = |f: fn(&crate::model::AlgorithmProperties) -> f64| {
        let t: Vec<f64> = truth.algorithms.iter().map(f).collect();
        let e: Vec<f64> = estimate.algorithms.iter().map(f).collect();
        mse(t.iter().zip(&e))
    };
    Ok(ParameterErrors {
        transfer: mse(truth
            .tasks
            .transfer
            .iter()
            .flatten()
            .zip(estimate.tasks.transfer.iter().flatten())),
        difficulty: mse(truth.tasks.difficulty.iter().zip(&estimate.tasks.difficulty)),
        gamma: algo(|a| a.transfer_efficiency),
        h: algo(|a| a.experience_retention),
        lambda: algo(|a| a.expertise_translation),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcome {
    pub trial: usize,
    pub seed: u64,
    pub errors: ParameterErrors,
    /// Mean squared curve error of the fit, over all algorithms.
    pub fit_mse: f64,
    /// Worst per-algorithm curve MSE.
    pub worst_algorithm_mse: f64,
}

/// Fits `data` and scores the estimate against `truth`. `initial` overrides
/// the seeded random initialisation.
pub fn recovery_trial(
    truth: &ScenarioParams,
    curriculum: &Curriculum,
    data: &[PerformanceMatrix],
    config: &FitConfig,
    initial: Option<&ScenarioParams>,
) -> Result<(ParameterErrors, super::FitResult)> {
    let result = match initial {
        Some(p) => fit_from(curriculum, data, config, p)?,
        None => fit(curriculum, data, config)?,
    };
    Ok((parameter_errors(truth, &result.params)?, result))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecoveryConfig {
    /// Scenario shape. The seed field is ignored; trial `t` uses `seed + t`.
    pub spec: ScenarioSpec,
    pub trials: usize,
    pub seed: u64,
    pub fit: FitConfig,
    /// Start every fit at the ground truth instead of a random point.
    pub init_at_truth: bool,
    /// Independent restarts per trial; the lowest final loss wins. Ignored
    /// with `init_at_truth`.
    pub restarts: usize,
    pub execution: Execution,
}

impl Default for RecoveryConfig {
    fn default() -> Self {
        Self {
            spec: ScenarioSpec::default(),
            trials: 20,
            seed: 0,
            fit: FitConfig::default(),
            init_at_truth: false,
            restarts: 1,
            execution: Execution::Parallel,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecoverySummary {
    /// Errors averaged over successful trials.
    pub mean: ParameterErrors,
    pub trials: Vec<TrialOutcome>,
    /// Trials whose fit failed, with the error message.
    pub failed: Vec<(usize, String)>,
}

impl RecoverySummary {
    pub fn mean_fit_mse(&self) -> f64 {
        self.trials.iter().map(|t| t.fit_mse).sum::<f64>() / self.trials.len().max(1) as f64
    }

    pub fn worst_algorithm_mse(&self) -> f64 {
        self.trials
            .iter()
            .map(|t| t.worst_algorithm_mse)
            .fold(0.0, f64::max)
    }
}

/// Runs independent trials (in parallel under [`Execution::Parallel`]) and
/// averages the per-group errors. Every trial is seeded from `seed + trial`
/// so results do not depend on the execution strategy.
pub fn recovery_experiment(config: &RecoveryConfig) -> Result<RecoverySummary> {
    if config.trials == 0 {
        return Err(Error::invalid("trials must be >= 1"));
    }
    config.spec.validate()?;
    let outcomes = config.execution.map_range(config.trials, |t| {
        let seed = config.seed.wrapping_add(t as u64);
        let spec = ScenarioSpec {
            seed,
            ..config.spec.clone()
        };
        let scenario = generate(&spec)?;
        let fit_cfg = FitConfig {
            seed,
            ..config.fit.clone()
        };
        let (errors, result) = if config.restarts > 1 && !config.init_at_truth {
            // Trials already run in parallel; restarts stay sequential.
            let result = fit_with_restarts(
                &scenario.curriculum,
                &scenario.data,
                &fit_cfg,
                config.restarts,
                Execution::Sequential,
            )?;
            (parameter_errors(&scenario.params, &result.params)?, result)
        } else {
            let init = config.init_at_truth.then_some(&scenario.params);
            recovery_trial(&scenario.params, &scenario.curriculum, &scenario.data, &fit_cfg, init)?
        };
        let worst = result
            .loss_per_algorithm
            .iter()
            .map(|(_, v)| *v)
            .fold(0.0, f64::max);
        Ok::<_, Error>(TrialOutcome {
            trial: t,
            seed,
            errors,
            fit_mse: result.mse_total,
            worst_algorithm_mse: worst,
        })
    });

    let mut trials = Vec::new();
    let mut failed = Vec::new();
    for (t, outcome) in outcomes.into_iter().enumerate() {
        match outcome {
            Ok(o) => trials.push(o),
            Err(e) => failed.push((t, e.to_string())),
        }
    }
    let mut sums = [0.0; 5];
    for o in &trials {
        for (s, v) in sums.iter_mut().zip(o.errors.as_array()) {
            *s += v;
        }
    }
    let k = trials.len().max(1) as f64;
    Ok(RecoverySummary {
        mean: ParameterErrors::from_array(sums.map(|s| s / k)),
        trials,
        failed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn init_at_truth_gives_zero_errors() {
        let cfg = RecoveryConfig {
            trials: 1,
            init_at_truth: true,
            ..Default::default()
        };
        let s = recovery_experiment(&cfg).unwrap();
        assert_eq!(s.mean, ParameterErrors::default());
        assert!(s.failed.is_empty());
    }

    #[test]
    fn errors_are_group_means() {
        let truth = crate::scenario::sample_params(&ScenarioSpec::with_seed(1)).unwrap();
        let mut est = truth.clone();
        est.tasks.transfer[0][0] += 0.5;
        est.algorithms[2].experience_retention += 0.3;
        let e = parameter_errors(&truth, &est).unwrap();
        assert!((e.transfer - 0.25 / 25.0).abs() < 1e-15);
        assert!((e.h - 0.09 / 3.0).abs() < 1e-15);
        assert_eq!(e.difficulty, 0.0);
    }

    #[test]
    fn thresholds() {
        let t = RecoveryThresholds::default();
        assert!(t.all_pass(&ParameterErrors::default()));
        let bad = ParameterErrors {
            h: 0.03,
            ..Default::default()
        };
        assert_eq!(t.passes(&bad), [true, true, true, false, true]);
    }

    #[test]
    fn parallel_and_sequential_agree() {
        let base = RecoveryConfig {
            trials: 3,
            fit: FitConfig {
                steps: 30,
                ..Default::default()
            },
            ..Default::default()
        };
        let seq = recovery_experiment(&RecoveryConfig {
            execution: Execution::Sequential,
            ..base.clone()
        })
        .unwrap();
        let par = recovery_experiment(&base).unwrap();
        assert_eq!(seq, par);
    }
}
