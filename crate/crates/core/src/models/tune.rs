//! Seeded random search over model hyperparameters.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ease::{fit_ease_with_basis, gram, gram_basis, DEFAULT_EASE_ITEM_CAP};
use super::itemknn::{fit_itemknn_sorted, sorted_similarities};
use super::{fit, fit_itemknn, ModelConfig, ModelFamily, ModelKind, Recommender};
use crate::corpus::{BinaryMatrix, EncodedSplit};
use crate::metrics::user_accuracy;
use crate::seed::derived_rng;
use crate::{Error, Result};

/// Validation cutoff for the tuning objective (nDCG@10).
pub const TUNE_CUTOFF: usize = 10;

const KNN_MIN: usize = 5;
const KNN_MAX: usize = 200;
const LAMBDA_MIN: f64 = 1.0;
const LAMBDA_MAX: f64 = 1.0e4;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trial {
    pub config: ModelConfig,
    pub validation_ndcg: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TuneOutcome {
    pub family: ModelFamily,
    pub best: ModelConfig,
    pub trials: Vec<Trial>,
}

impl TuneOutcome {
    pub fn fits(&self) -> usize {
        self.trials.len()
    }
}

/// Mean nDCG@`k` over users with a non-empty `truth` row.
pub(crate) fn mean_ndcg(model: &dyn Recommender, truth: &BinaryMatrix, k: usize) -> f64 {
    let users: Vec<u32> = (0..truth.n_users() as u32)
        .filter(|&u| !truth.row(u).is_empty())
        .collect();
    if users.is_empty() {
        return 0.0;
    }
    let per_user: Vec<f64> = users
        .par_iter()
        .map(|&u| {
            let recs = model.recommend(u, k);
            user_accuracy(&recs, truth.row(u), k)
                .expect("model lists are duplicate-free")
                .ndcg
        })
        .collect();
    crate::metrics::mean(&per_user)
}

fn sample_configs(family: ModelFamily, n_items: usize, budget: usize, seed: u64) -> Vec<ModelConfig> {
    let mut rng = derived_rng(seed, "tune", &[family as u64]);
    let knn_hi = KNN_MAX.min(n_items.saturating_sub(1)).max(1);
    let knn_lo = KNN_MIN.min(knn_hi);
    (0..budget)
        .map(|_| {
            let kind = match family {
                ModelFamily::ItemKnn => ModelKind::ItemKnn {
                    neighbors: rng.random_range(knn_lo..=knn_hi),
                },
                ModelFamily::Ease => {
                    let log = rng.random_range(LAMBDA_MIN.ln()..LAMBDA_MAX.ln());
                    ModelKind::Ease { lambda: log.exp() }
                }
                ModelFamily::Random | ModelFamily::MostPop => family.default_kind(),
            };
            ModelConfig::new(kind, seed)
        })
        .collect()
}

/// Samples `budget` configurations, fits each on train, scores nDCG@10 on
/// validation and returns the best (first on ties). Parameterless families
/// return their default configuration without fitting.
pub fn tune(family: ModelFamily, split: &EncodedSplit, budget: usize, seed: u64) -> Result<TuneOutcome> {
    if budget == 0 {
        return Err(Error::invalid("tuning budget must be at least 1"));
    }
    if !family.has_hyperparameters() {
        return Ok(TuneOutcome {
            family,
            best: ModelConfig::new(family.default_kind(), seed),
            trials: Vec::new(),
        });
    }
    let train = &split.train;
    let configs = sample_configs(family, train.n_items(), budget, seed);
    let ease_gram = match family {
        ModelFamily::Ease => {
            if train.n_items() > DEFAULT_EASE_ITEM_CAP {
                return Err(Error::invalid(format!(
                    "EASE dense solve limited to {DEFAULT_EASE_ITEM_CAP} items, got {}",
                    train.n_items()
                )));
            }
            Some(gram_basis(&gram(train)))
        }
        _ => None,
    };

    let knn_sorted = match family {
        ModelFamily::ItemKnn => Some(sorted_similarities(train)),
        _ => None,
    };

    let mut trials = Vec::with_capacity(configs.len());
    for config in configs {
        let model: Box<dyn Recommender> = match (&config.kind, &ease_gram) {
            (ModelKind::Ease { lambda }, Some(g)) => Box::new(fit_ease_with_basis(train, g, *lambda)?),
            (ModelKind::ItemKnn { neighbors }, _) => match &knn_sorted {
                Some(sorted) => Box::new(fit_itemknn_sorted(train, sorted, *neighbors)?),
                None => Box::new(fit_itemknn(train, *neighbors)?),
            },
            _ => fit(&config, train)?,
        };
        let score = mean_ndcg(model.as_ref(), &split.validation, TUNE_CUTOFF);
        trials.push(Trial {
            config,
            validation_ndcg: score,
        });
    }
    let mut best = 0;
    for (n, t) in trials.iter().enumerate() {
        if t.validation_ndcg > trials[best].validation_ndcg {
            best = n;
        }
    }
    Ok(TuneOutcome {
        family,
        best: trials[best].config.clone(),
        trials,
    })
}

/// Fits `config` on train ∪ validation; seen-item exclusion then covers both.
pub fn refit_final(config: &ModelConfig, split: &EncodedSplit) -> Result<Box<dyn Recommender>> {
    fit(config, &split.train_validation())
}
