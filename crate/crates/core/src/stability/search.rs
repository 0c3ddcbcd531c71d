use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{add_best_method, add_similar_method, Injection};
use crate::aggregation::{aggregate, AggregationOptions, Rule};
use crate::matrix::MetricMatrix;
use crate::seed::derived_rng;
use crate::synthetic::random_metric_matrix;
use crate::Result;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PerturbationKind {
    AddSimilar { alpha: f64 },
    AddBest { alpha: f64 },
}

/// Shape range of the random matrices tried by the search.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RandomMatrixSpec {
    pub min_datasets: usize,
    pub max_datasets: usize,
    pub min_methods: usize,
    pub max_methods: usize,
}

impl Default for RandomMatrixSpec {
    fn default() -> Self {
        RandomMatrixSpec {
            min_datasets: 2,
            max_datasets: 8,
            min_methods: 3,
            max_methods: 5,
        }
    }
}

/// A matrix on which a perturbation changes the order of the original methods.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Counterexample {
    pub rule: Rule,
    pub perturbation: PerturbationKind,
    /// Column copied by a similar-method injection.
    pub target: Option<usize>,
    pub seed: u64,
    pub attempt: usize,
    pub spearman: f64,
    pub before: Vec<String>,
    pub after: Vec<String>,
    pub q: MetricMatrix,
}

impl Counterexample {
    /// Re-runs the perturbation on the stored matrix.
    pub fn replay(&self, opts: &AggregationOptions) -> Result<Injection> {
        match self.perturbation {
            PerturbationKind::AddSimilar { alpha } => {
                add_similar_method(&self.q, self.rule, opts, self.target.unwrap_or(0), alpha)
            }
            PerturbationKind::AddBest { alpha } => add_best_method(&self.q, self.rule, opts, alpha),
        }
    }
}

/// Tries `attempts` random matrices and returns the first on which
/// `perturbation` lowers the Spearman correlation of the original methods
/// below 1.
pub fn search_counterexample(
    rule: Rule,
    perturbation: PerturbationKind,
    opts: &AggregationOptions,
    spec: RandomMatrixSpec,
    attempts: usize,
    seed: u64,
) -> Result<Option<Counterexample>> {
    for attempt in 0..attempts {
        let mut rng = derived_rng(seed, "counterexample", &[attempt as u64]);
        let d = rng.random_range(spec.min_datasets..=spec.max_datasets);
        let m = rng.random_range(spec.min_methods..=spec.max_methods);
        let q = random_metric_matrix(&mut rng, d, m)?;
        let targets: Vec<Option<usize>> = match perturbation {
            PerturbationKind::AddSimilar { .. } => (0..m).map(Some).collect(),
            PerturbationKind::AddBest { .. } => vec![None],
        };
        for target in targets {
            let inj = match perturbation {
                PerturbationKind::AddSimilar { alpha } => add_similar_method(&q, rule, opts, target.unwrap_or(0), alpha)?,
                PerturbationKind::AddBest { alpha } => add_best_method(&q, rule, opts, alpha)?,
            };
            if inj.spearman < 1.0 - 1e-12 {
                let before = aggregate(&q, rule, opts)?;
                let originals = |b: &crate::aggregation::Leaderboard| -> Vec<String> {
                    b.order()
                        .into_iter()
                        .filter(|l| q.method_index(l).is_some())
                        .map(str::to_string)
                        .collect()
                };
                return Ok(Some(Counterexample {
                    rule,
                    perturbation,
                    target,
                    seed,
                    attempt,
                    spearman: inj.spearman,
                    before: originals(&before),
                    after: originals(&inj.leaderboard),
                    q,
                }));
            }
        }
    }
    Ok(None)
}
