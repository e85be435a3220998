//! Flat vector view of [`ScenarioParams`] used by the optimiser.
//!
//! Layout: transfer matrix row-major (`n * n`), difficulty (`n`), then
//! `(gamma, h, lambda)` for each algorithm.

use crate::model::{AlgorithmProperties, ScenarioParams, TaskProperties};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Layout {
    pub n: usize,
    pub p: usize,
}

impl Layout {
    pub fn of(params: &ScenarioParams) -> Self {
        Self {
            n: params.n_tasks(),
            p: params.n_algorithms(),
        }
    }

    pub fn len(&self) -> usize {
        self.n * self.n + self.n + 3 * self.p
    }

    pub fn algorithm(&self, a: usize) -> usize {
        self.n * self.n + self.n + 3 * a
    }

    pub fn flatten(&self, params: &ScenarioParams) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.len());
        for row in &params.tasks.transfer {
            out.extend_from_slice(row);
        }
        out.extend_from_slice(&params.tasks.difficulty);
        for a in &params.algorithms {
            out.extend([
                a.transfer_efficiency,
                a.experience_retention,
                a.expertise_translation,
            ]);
        }
        out
    }

    /// Rebuilds parameters from `flat`, taking algorithm names from `names`.
    pub fn unflatten(&self, flat: &[f64], names: &[String]) -> ScenarioParams {
        let n = self.n;
        let transfer = flat[..n * n].chunks(n).map(<[f64]>::to_vec).collect();
        let difficulty = flat[n * n..n * n + n].to_vec();
        let algorithms = names
            .iter()
            .enumerate()
            .map(|(a, name)| {
                let b = self.algorithm(a);
                AlgorithmProperties::new(name.clone(), flat[b], flat[b + 1], flat[b + 2])
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

    /// Human-readable name of flat index `k`, using algorithm names.
    pub fn describe(&self, k: usize, names: &[String]) -> String {
        let n = self.n;
        if k < n * n {
            format!("transfer_matrix[{}][{}]", k / n, k % n)
        } else if k < n * n + n {
            format!("difficulty[{}]", k - n * n)
        } else {
            let r = k - n * n - n;
            let field = ["gamma", "h", "lambda"][r % 3];
            let algo = names.get(r / 3).map_or("?", String::as_str);
            format!("{field}[{algo}]")
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flatten_round_trip_and_naming() {
        let params = ScenarioParams {
            tasks: TaskProperties {
                transfer: vec![vec![1.0, 2.0], vec![3.0, 4.0]],
                difficulty: vec![5.0, 6.0],
            },
            algorithms: vec![
                AlgorithmProperties::new("x", 7.0, 8.0, 9.0),
                AlgorithmProperties::new("y", 10.0, 11.0, 12.0),
            ],
        };
        let layout = Layout::of(&params);
        let flat = layout.flatten(&params);
        assert_eq!(flat, (1..=12).map(f64::from).collect::<Vec<_>>());
        let names = vec!["x".to_string(), "y".to_string()];
        assert_eq!(layout.unflatten(&flat, &names), params);
        assert_eq!(layout.describe(1, &names), "transfer_matrix[0][1]");
        assert_eq!(layout.describe(5, &names), "difficulty[1]");
        assert_eq!(layout.describe(10, &names), "h[y]");
    }
}
