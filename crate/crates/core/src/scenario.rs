//! Seeded synthetic scenarios: ground-truth parameters, a random curriculum and
//! the curves they produce.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::model::{
    simulate_all, AlgorithmProperties, Curriculum, PerformanceMatrix, ScenarioParams,
    TaskProperties, MIN_DIFFICULTY,
};

const NOISE_STREAM: u64 = 2;
/// Noisy observations are clipped to `[-CLIP, CLIP]`, inside the model range.
const CLIP: f64 = 1.0 - 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSpec {
    pub n_tasks: usize,
    pub n_algos: usize,
    pub curriculum_len: usize,
    pub seed: u64,
    pub noise_std: f64,
}

impl Default for ScenarioSpec {
    fn default() -> Self {
        Self {
            n_tasks: 5,
            n_algos: 3,
            curriculum_len: 9,
            seed: 0,
            noise_std: 0.0,
        }
    }
}

impl ScenarioSpec {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_tasks == 0 || self.n_algos == 0 || self.curriculum_len == 0 {
            return Err(Error::invalid(
                "task count, algorithm count and curriculum length must all be >= 1",
            ));
        }
        if !(self.noise_std >= 0.0 && self.noise_std.is_finite()) {
            return Err(Error::invalid("noise standard deviation must be >= 0"));
        }
        Ok(())
    }

    fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }
}

/// Algorithm names used by generated scenarios.
pub fn algorithm_name(index: usize) -> String {
    format!("algo_{}", index + 1)
}

fn draw_params(spec: &ScenarioSpec, rng: &mut ChaCha8Rng) -> ScenarioParams {
    let n = spec.n_tasks;
    let transfer = (0..n)
        .map(|_| (0..n).map(|_| rng.random_range(-1.0..=1.0)).collect())
        .collect();
    let difficulty = (0..n)
        .map(|_| rng.random_range(MIN_DIFFICULTY..=1.0))
        .collect();
    let algorithms = (0..spec.n_algos)
        .map(|a| {
            let g = rng.random_range(0.0..=1.0);
            let h = rng.random_range(0.0..=1.0);
            let l = rng.random_range(0.0..=1.0);
            AlgorithmProperties::new(algorithm_name(a), g, h, l)
        })
        .collect();
    ScenarioParams {
        tasks: TaskProperties {
            transfer,
            difficulty,
        },
        algorithms,
    }
}

fn draw_curriculum(spec: &ScenarioSpec, rng: &mut ChaCha8Rng) -> Curriculum {
    let entries = (0..spec.curriculum_len)
        .map(|_| rng.random_range(0..spec.n_tasks))
        .collect();
    Curriculum::new(entries, spec.n_tasks).expect("entries drawn below n_tasks")
}

/// Ground truth: `A ~ U[-1, 1]`, `d ~ U[MIN_DIFFICULTY, 1]`, and
/// `gamma, h, lambda ~ U[0, 1]`.
pub fn sample_params(spec: &ScenarioSpec) -> Result<ScenarioParams> {
    spec.validate()?;
    Ok(draw_params(spec, &mut spec.rng()))
}

/// Curriculum of i.i.d. uniform task draws. Tasks may never appear.
pub fn sample_curriculum(spec: &ScenarioSpec) -> Result<Curriculum> {
    spec.validate()?;
    let mut rng = spec.rng();
    draw_params(spec, &mut rng);
    Ok(draw_curriculum(spec, &mut rng))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub params: ScenarioParams,
    pub curriculum: Curriculum,
    pub data: Vec<PerformanceMatrix>,
}

/// Parameters, curriculum and (optionally noisy) simulated curves.
pub fn generate(spec: &ScenarioSpec) -> Result<Scenario> {
    spec.validate()?;
    let mut rng = spec.rng();
    let params = draw_params(spec, &mut rng);
    let curriculum = draw_curriculum(spec, &mut rng);
    let mut data = simulate_all(&params, &curriculum)?;
    if spec.noise_std > 0.0 {
        let mut noise_rng = spec.rng();
        noise_rng.set_stream(NOISE_STREAM);
        let normal = Normal::new(0.0, spec.noise_std)
            .map_err(|e| Error::invalid(format!("noise distribution: {e}")))?;
        for v in data.iter_mut().flat_map(|m| m.values.iter_mut().flatten()) {
            *v = (*v + normal.sample(&mut noise_rng)).clamp(-CLIP, CLIP);
        }
    }
    Ok(Scenario {
        params,
        curriculum,
        data,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimator::loss;

    #[test]
    fn sampled_values_in_range_and_seeded() {
        for seed in 0..50 {
            let spec = ScenarioSpec::with_seed(seed);
            let p = sample_params(&spec).unwrap();
            assert!(p.is_feasible());
            assert!(p.tasks.difficulty.iter().all(|&d| (MIN_DIFFICULTY..=1.0).contains(&d)));
            for a in &p.algorithms {
                assert!(a.transfer_efficiency <= 1.0 && a.expertise_translation <= 1.0);
            }
            assert_eq!(p, sample_params(&spec).unwrap());
        }
    }

    #[test]
    fn curriculum_shape() {
        let spec = ScenarioSpec {
            n_tasks: 4,
            curriculum_len: 13,
            ..ScenarioSpec::with_seed(11)
        };
        let c = sample_curriculum(&spec).unwrap();
        assert_eq!(c.len(), 13);
        assert!(c.entries().iter().all(|&e| e < 4));
        assert_eq!(c, generate(&spec).unwrap().curriculum);
    }

    #[test]
    fn noiseless_data_is_a_fixed_point() {
        let s = generate(&ScenarioSpec::with_seed(5)).unwrap();
        assert_eq!(s.data, simulate_all(&s.params, &s.curriculum).unwrap());
        assert_eq!(loss(&s.params, &s.curriculum, &s.data).unwrap(), 0.0);
        assert_eq!(s, generate(&ScenarioSpec::with_seed(5)).unwrap());
    }

    #[test]
    fn noise_keeps_values_in_range() {
        let spec = ScenarioSpec {
            noise_std: 0.5,
            ..ScenarioSpec::with_seed(2)
        };
        let s = generate(&spec).unwrap();
        assert!(s.data.iter().flat_map(|m| m.values.iter().flatten()).all(|v| v.abs() < 1.0));
    }

    #[test]
    fn invalid_specs() {
        assert!(sample_params(&ScenarioSpec { n_tasks: 0, ..Default::default() }).is_err());
        assert!(generate(&ScenarioSpec { noise_std: -1.0, ..Default::default() }).is_err());
    }
}
