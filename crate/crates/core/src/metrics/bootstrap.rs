use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{mean, user_accuracy, GroundTruth, Metric, UserAccuracy};
use crate::models::RecommendationLists;
use crate::seed::derived_rng;
use crate::{Error, Result};

/// Per-iteration user-averaged accuracy over bootstrap resamples.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bootstrap {
    pub k: usize,
    pub sample_size: usize,
    pub iterations: Vec<UserAccuracy>,
}

impl Bootstrap {
    /// Per-iteration values of one accuracy metric.
    pub fn values(&self, metric: Metric) -> Vec<f64> {
        self.iterations
            .iter()
            .map(|a| a.get(metric).unwrap_or(f64::NAN))
            .collect()
    }

    pub fn mean(&self, metric: Metric) -> f64 {
        mean(&self.values(metric))
    }

    /// Population standard deviation (1/R) across iterations.
    pub fn std(&self, metric: Metric) -> f64 {
        let v = self.values(metric);
        let mu = mean(&v);
        let dev: Vec<f64> = v.iter().map(|x| (x - mu).powi(2)).collect();
        mean(&dev).sqrt()
    }
}

/// Draws `iterations` resamples of `⌊fraction·|M|⌋` users with replacement
/// and averages their accuracy at cutoff `k`.
pub fn bootstrap_evaluate(
    lists: &RecommendationLists,
    truth: &GroundTruth,
    k: usize,
    iterations: usize,
    fraction: f64,
    seed: u64,
) -> Result<Bootstrap> {
    if iterations < 2 {
        return Err(Error::invalid("bootstrap needs at least 2 iterations"));
    }
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::invalid(format!("sample fraction must lie in (0, 1], got {fraction}")));
    }
    let users = truth.users();
    if users.is_empty() {
        return Err(Error::Empty("no evaluated users".into()));
    }
    let per_user: Vec<UserAccuracy> = users
        .iter()
        .map(|&u| user_accuracy(lists.get(u), truth.relevant(u), k))
        .collect::<Result<_>>()?;
    let sample_size = ((fraction * users.len() as f64).floor() as usize).max(1);
    let iterations = (0..iterations)
        .map(|it| {
            let mut rng = derived_rng(seed, "bootstrap", &[it as u64]);
            let picks: Vec<&UserAccuracy> = (0..sample_size)
                .map(|_| &per_user[rng.random_range(0..per_user.len())])
                .collect();
            let avg = |m: Metric| mean(&picks.iter().map(|a| a.get(m).unwrap_or(0.0)).collect::<Vec<_>>());
            UserAccuracy {
                precision: avg(Metric::Precision),
                recall: avg(Metric::Recall),
                map: avg(Metric::Map),
                ndcg: avg(Metric::Ndcg),
                mrr: avg(Metric::Mrr),
                hitrate: avg(Metric::HitRate),
            }
        })
        .collect();
    Ok(Bootstrap {
        k,
        sample_size,
        iterations,
    })
}
