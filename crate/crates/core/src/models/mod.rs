//! Desk-scale baseline recommenders and a seeded hyperparameter search.
//!
//! Every model recommends only items absent from its fitting data for that
//! user, orders candidates by descending score and breaks score ties by
//! ascending item index.

mod ease;
mod itemknn;
mod mostpop;
mod random;
mod tune;

use std::collections::BTreeMap;
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use ease::{fit_ease, Ease, DEFAULT_EASE_ITEM_CAP};
pub use itemknn::{fit_itemknn, ItemKnn};
pub use mostpop::{fit_mostpop, MostPop};
pub use random::{fit_random, RandomModel};
pub use tune::{refit_final, tune, Trial, TuneOutcome, TUNE_CUTOFF};

pub use crate::matrix::import_metric_matrix;

use crate::corpus::BinaryMatrix;
use crate::{Error, Result};

/// Per-user top-k lists (item indices in score order).
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RecommendationLists {
    pub k: usize,
    pub lists: BTreeMap<u32, Vec<u32>>,
}

impl RecommendationLists {
    pub fn get(&self, user: u32) -> &[u32] {
        self.lists.get(&user).map_or(&[], Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.lists.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lists.is_empty()
    }
}

pub trait Recommender: Send + Sync {
    fn name(&self) -> &'static str;

    /// Interactions the model was fitted on; their items are never recommended.
    fn fitted_on(&self) -> &BinaryMatrix;

    fn recommend(&self, user: u32, k: usize) -> Vec<u32>;

    fn recommend_users(&self, users: &[u32], k: usize) -> RecommendationLists {
        let lists: Vec<(u32, Vec<u32>)> = users
            .par_iter()
            .map(|&u| (u, self.recommend(u, k)))
            .collect();
        RecommendationLists {
            k,
            lists: lists.into_iter().collect(),
        }
    }
}

/// Highest-scoring `k` items outside `seen` (sorted ascending), ties by
/// ascending item index.
pub(crate) fn top_k_unseen(scores: &[f64], seen: &[u32], k: usize) -> Vec<u32> {
    let mut cand: Vec<(f64, u32)> = Vec::with_capacity(scores.len().saturating_sub(seen.len()));
    let mut s = 0;
    for (i, &score) in scores.iter().enumerate() {
        let i = i as u32;
        while s < seen.len() && seen[s] < i {
            s += 1;
        }
        if s < seen.len() && seen[s] == i {
            continue;
        }
        cand.push((score, i));
    }
    let cmp = |a: &(f64, u32), b: &(f64, u32)| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1));
    if k == 0 {
        return Vec::new();
    }
    if cand.len() > k {
        cand.select_nth_unstable_by(k - 1, cmp);
        cand.truncate(k);
    }
    cand.sort_unstable_by(cmp);
    cand.into_iter().map(|(_, i)| i).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelKind {
    Random,
    MostPop,
    ItemKnn { neighbors: usize },
    Ease { lambda: f64 },
    /// Scored outside the toolkit; its metrics arrive through an imported matrix.
    External { name: String },
}

/// Model families known to the tuner.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelFamily {
    Random,
    MostPop,
    ItemKnn,
    Ease,
}

impl ModelFamily {
    pub const ALL: [ModelFamily; 4] = [
        ModelFamily::Random,
        ModelFamily::MostPop,
        ModelFamily::ItemKnn,
        ModelFamily::Ease,
    ];

    pub fn label(self) -> &'static str {
        match self {
            ModelFamily::Random => "Random",
            ModelFamily::MostPop => "MostPop",
            ModelFamily::ItemKnn => "ItemKNN",
            ModelFamily::Ease => "EASE",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "random" => Ok(ModelFamily::Random),
            "mostpop" | "most_pop" | "popular" => Ok(ModelFamily::MostPop),
            "itemknn" | "item_knn" | "knn" => Ok(ModelFamily::ItemKnn),
            "ease" => Ok(ModelFamily::Ease),
            other => Err(Error::invalid(format!("unknown model {other:?}"))),
        }
    }

    pub fn default_kind(self) -> ModelKind {
        match self {
            ModelFamily::Random => ModelKind::Random,
            ModelFamily::MostPop => ModelKind::MostPop,
            ModelFamily::ItemKnn => ModelKind::ItemKnn { neighbors: 100 },
            ModelFamily::Ease => ModelKind::Ease { lambda: 100.0 },
        }
    }

    pub fn has_hyperparameters(self) -> bool {
        matches!(self, ModelFamily::ItemKnn | ModelFamily::Ease)
    }
}

impl fmt::Display for ModelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    #[serde(flatten)]
    pub kind: ModelKind,
    pub seed: u64,
}

impl ModelConfig {
    pub fn new(kind: ModelKind, seed: u64) -> Self {
        ModelConfig { kind, seed }
    }

    pub fn validate(&self) -> Result<()> {
        match &self.kind {
            ModelKind::ItemKnn { neighbors } if *neighbors == 0 => {
                Err(Error::invalid("ItemKNN neighborhood size must be at least 1"))
            }
            ModelKind::Ease { lambda } if !(*lambda > 0.0 && lambda.is_finite()) => {
                Err(Error::invalid(format!("EASE lambda must be positive, got {lambda}")))
            }
            _ => Ok(()),
        }
    }
}

/// Fits the model described by `config` on `data`.
pub fn fit(config: &ModelConfig, data: &BinaryMatrix) -> Result<Box<dyn Recommender>> {
    config.validate()?;
    Ok(match &config.kind {
        ModelKind::Random => Box::new(fit_random(data, config.seed)?),
        ModelKind::MostPop => Box::new(fit_mostpop(data)?),
        ModelKind::ItemKnn { neighbors } => Box::new(fit_itemknn(data, *neighbors)?),
        ModelKind::Ease { lambda } => Box::new(fit_ease(data, *lambda, DEFAULT_EASE_ITEM_CAP)?),
        ModelKind::External { name } => {
            return Err(Error::invalid(format!(
                "model {name:?} is external; import its metric matrix instead"
            )))
        }
    })
}

pub(crate) fn require_nonempty(data: &BinaryMatrix) -> Result<()> {
    if data.nnz() == 0 {
        return Err(Error::Empty("cannot fit on empty interactions".into()));
    }
    Ok(())
}
