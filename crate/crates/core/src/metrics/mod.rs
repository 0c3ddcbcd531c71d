//! Top-k quality metrics.
//!
//! Accuracy metrics use the modified cutoff `k_m(u) = min(k, |rel(u)|)` so a
//! user with few relevant items can still reach a perfect score. Every
//! average is a compensated sum over users in ascending user order, so
//! parallel and serial evaluation agree.

mod bootstrap;
mod correlation;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use bootstrap::{bootstrap_evaluate, Bootstrap};
pub use correlation::{metric_correlation, CorrelationMatrix};

use crate::corpus::{sorted_intersection_len, BinaryMatrix};
use crate::models::RecommendationLists;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Precision,
    Recall,
    Map,
    Ndcg,
    Mrr,
    HitRate,
    Coverage,
    Diversity,
    Novelty,
}

impl Metric {
    pub const ALL: [Metric; 9] = [
        Metric::Precision,
        Metric::Recall,
        Metric::Map,
        Metric::Ndcg,
        Metric::Mrr,
        Metric::HitRate,
        Metric::Coverage,
        Metric::Diversity,
        Metric::Novelty,
    ];

    pub const USER: [Metric; 6] = [
        Metric::Precision,
        Metric::Recall,
        Metric::Map,
        Metric::Ndcg,
        Metric::Mrr,
        Metric::HitRate,
    ];

    /// Lowercase identifier used in file names and serialized reports.
    pub fn name(self) -> &'static str {
        match self {
            Metric::Precision => "precision",
            Metric::Recall => "recall",
            Metric::Map => "map",
            Metric::Ndcg => "ndcg",
            Metric::Mrr => "mrr",
            Metric::HitRate => "hitrate",
            Metric::Coverage => "coverage",
            Metric::Diversity => "diversity",
            Metric::Novelty => "novelty",
        }
    }

    /// Display label, e.g. `nDCG`.
    pub fn label(self) -> &'static str {
        match self {
            Metric::Precision => "Precision",
            Metric::Recall => "Recall",
            Metric::Map => "MAP",
            Metric::Ndcg => "nDCG",
            Metric::Mrr => "MRR",
            Metric::HitRate => "HitRate",
            Metric::Coverage => "Coverage",
            Metric::Diversity => "Diversity",
            Metric::Novelty => "Novelty",
        }
    }

    pub fn is_user_metric(self) -> bool {
        Metric::USER.contains(&self)
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.to_ascii_lowercase();
        Metric::ALL
            .into_iter()
            .find(|m| m.name() == lower)
            .ok_or_else(|| Error::invalid(format!("unknown metric {s:?}")))
    }
}

/// Neumaier-compensated sum.
pub fn neumaier_sum(xs: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut c = 0.0f64;
    for x in xs {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            c += (sum - t) + x;
        } else {
            c += (x - t) + sum;
        }
        sum = t;
    }
    sum + c
}

/// Compensated mean; 0 for an empty slice.
pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    neumaier_sum(xs.iter().copied()) / xs.len() as f64
}

/// The six per-user accuracy metrics.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct UserAccuracy {
    pub precision: f64,
    pub recall: f64,
    pub map: f64,
    pub ndcg: f64,
    pub mrr: f64,
    pub hitrate: f64,
}

impl UserAccuracy {
    pub fn get(&self, metric: Metric) -> Option<f64> {
        Some(match metric {
            Metric::Precision => self.precision,
            Metric::Recall => self.recall,
            Metric::Map => self.map,
            Metric::Ndcg => self.ndcg,
            Metric::Mrr => self.mrr,
            Metric::HitRate => self.hitrate,
            _ => return None,
        })
    }
}

/// Accuracy of one user's list against the sorted relevant set `rel`.
/// Only the first `k` recommendations are considered.
pub fn user_accuracy(recs: &[u32], rel: &[u32], k: usize) -> Result<UserAccuracy> {
    if rel.is_empty() {
        return Err(Error::invalid("relevant set must be non-empty"));
    }
    if k == 0 {
        return Err(Error::invalid("cutoff k must be at least 1"));
    }
    let recs = &recs[..recs.len().min(k)];
    let mut sorted = recs.to_vec();
    sorted.sort_unstable();
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::invalid("recommendation list contains duplicate items"));
    }
    let km = k.min(rel.len());
    let mut hits = 0usize;
    let mut ap = 0.0;
    let mut dcg = 0.0;
    let mut first_hit = None;
    for (pos, item) in recs.iter().enumerate() {
        if rel.binary_search(item).is_ok() {
            let rank = pos + 1;
            hits += 1;
            ap += hits as f64 / rank as f64;
            dcg += 1.0 / (rank as f64 + 1.0).log2();
            first_hit.get_or_insert(rank);
        }
    }
    let idcg: f64 = (1..=km).map(|r| 1.0 / (r as f64 + 1.0).log2()).sum();
    Ok(UserAccuracy {
        precision: hits as f64 / km as f64,
        recall: hits as f64 / rel.len() as f64,
        map: ap / km as f64,
        ndcg: dcg / idcg,
        mrr: first_hit.map_or(0.0, |r| 1.0 / r as f64),
        hitrate: if hits > 0 { 1.0 } else { 0.0 },
    })
}

/// Relevant test items per evaluated user plus the interaction history used
/// for catalog metrics.
#[derive(Clone, Debug)]
pub struct GroundTruth {
    users: Vec<u32>,
    relevant: BTreeMap<u32, Vec<u32>>,
    history: BinaryMatrix,
}

impl GroundTruth {
    /// Evaluated users are those with at least one test item. `history` is
    /// the fitting data; its item dimension is the catalog.
    pub fn new(test: &BinaryMatrix, history: &BinaryMatrix) -> Result<Self> {
        if test.n_items() != history.n_items() {
            return Err(Error::invalid(format!(
                "test has {} items but history has {}",
                test.n_items(),
                history.n_items()
            )));
        }
        let relevant: BTreeMap<u32, Vec<u32>> = (0..test.n_users() as u32)
            .filter(|&u| !test.row(u).is_empty())
            .map(|u| (u, test.row(u).to_vec()))
            .collect();
        Self::from_sets(relevant, history.clone())
    }

    /// Builds from explicit relevant sets; users with empty sets are dropped.
    pub fn from_sets(relevant: BTreeMap<u32, Vec<u32>>, history: BinaryMatrix) -> Result<Self> {
        let mut kept = BTreeMap::new();
        for (u, mut items) in relevant {
            items.sort_unstable();
            items.dedup();
            if items.is_empty() {
                continue;
            }
            if items.last().is_some_and(|&i| i as usize >= history.n_items()) {
                return Err(Error::invalid(format!("relevant item of user {u} outside the catalog")));
            }
            kept.insert(u, items);
        }
        if kept.is_empty() {
            return Err(Error::Empty("no user has relevant test items".into()));
        }
        Ok(GroundTruth {
            users: kept.keys().copied().collect(),
            relevant: kept,
            history,
        })
    }

    pub fn users(&self) -> &[u32] {
        &self.users
    }

    pub fn relevant(&self, user: u32) -> &[u32] {
        self.relevant.get(&user).map_or(&[], Vec::as_slice)
    }

    pub fn history(&self) -> &BinaryMatrix {
        &self.history
    }

    pub fn catalog_size(&self) -> usize {
        self.history.n_items()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CatalogMetrics {
    pub coverage: f64,
    pub diversity: f64,
    pub novelty: f64,
    /// Users whose list had fewer than two items (intra-list similarity 0).
    pub short_lists: usize,
}

/// Coverage, diversity and novelty of the lists of `users`, each truncated to `k`.
pub fn catalog_metrics(lists: &RecommendationLists, history: &BinaryMatrix, users: &[u32], k: usize) -> Result<CatalogMetrics> {
    if users.is_empty() {
        return Err(Error::Empty("no users to evaluate".into()));
    }
    let n_items = history.n_items();
    let active = history.active_users();
    let mut receivers = vec![0usize; n_items];
    let mut ils = Vec::with_capacity(users.len());
    let mut short_lists = 0;
    for &u in users {
        let list = lists.get(u);
        let list = &list[..list.len().min(k)];
        for &i in list {
            if i as usize >= n_items {
                return Err(Error::invalid(format!("recommended item {i} outside the catalog")));
            }
            receivers[i as usize] += 1;
        }
        if list.len() < 2 {
            short_lists += 1;
            ils.push(0.0);
            continue;
        }
        let mut sims = Vec::with_capacity(list.len() * (list.len() - 1) / 2);
        for a in 0..list.len() {
            for b in a + 1..list.len() {
                sims.push(history.item_cosine(list[a], list[b]));
            }
        }
        ils.push(mean(&sims));
    }
    if short_lists > 0 {
        log::warn!("{short_lists} users have fewer than two recommendations; their intra-list similarity is 0");
    }
    let distinct = receivers.iter().filter(|&&c| c > 0).count();
    let n_users = users.len() as f64;
    let novelty = neumaier_sum(receivers.iter().enumerate().filter(|(_, &c)| c > 0).map(|(i, &c)| {
        let holders = history.col(i as u32).len().max(1);
        let p = holders as f64 / active.max(1) as f64;
        (c as f64 / n_users) * -p.log2()
    }));
    Ok(CatalogMetrics {
        coverage: if n_items == 0 { 0.0 } else { distinct as f64 / n_items as f64 },
        diversity: 1.0 - mean(&ils),
        novelty: novelty.max(0.0),
        short_lists,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricValue {
    pub metric: Metric,
    pub k: usize,
    pub value: f64,
}

/// Metric values keyed by `(metric, k)`, stably ordered by metric name then k.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub users: usize,
    pub values: Vec<MetricValue>,
}

impl MetricReport {
    fn from_map(users: usize, map: BTreeMap<(&'static str, usize), (Metric, f64)>) -> Self {
        MetricReport {
            users,
            values: map
                .into_iter()
                .map(|((_, k), (metric, value))| MetricValue { metric, k, value })
                .collect(),
        }
    }

    pub fn get(&self, metric: Metric, k: usize) -> Option<f64> {
        self.values
            .iter()
            .find(|v| v.metric == metric && v.k == k)
            .map(|v| v.value)
    }

    /// `metric,k,value` text.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("metric,k,value\n");
        for v in &self.values {
            out.push_str(&format!("{},{},{}\n", v.metric, v.k, crate::io::fmt_f64(v.value)));
        }
        out
    }

    pub fn from_csv(text: &str, users: usize) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (n, line) in text.lines().enumerate().skip(1) {
            if line.trim().is_empty() {
                continue;
            }
            let parts: Vec<&str> = line.split(',').collect();
            let bad = |m: &str| Error::Parse {
                line: n + 1,
                message: m.to_string(),
            };
            if parts.len() != 3 {
                return Err(bad("expected metric,k,value"));
            }
            let metric: Metric = parts[0].parse().map_err(|_| bad("unknown metric"))?;
            let k: usize = parts[1].parse().map_err(|_| bad("bad k"))?;
            let value: f64 = parts[2].parse().map_err(|_| bad("bad value"))?;
            map.insert((metric.name(), k), (metric, value));
        }
        Ok(Self::from_map(users, map))
    }
}

/// Evaluates lists against `truth` at every cutoff in `ks`. Lists longer
/// than a cutoff are truncated, so one list of length `max(ks)` serves all.
pub fn evaluate(lists: &RecommendationLists, truth: &GroundTruth, ks: &[usize]) -> Result<MetricReport> {
    if ks.is_empty() || ks.contains(&0) {
        return Err(Error::invalid("cutoffs must be a non-empty list of positive integers"));
    }
    let users = truth.users();
    let mut map = BTreeMap::new();
    for &k in ks {
        let per_user: Vec<UserAccuracy> = users
            .par_iter()
            .map(|&u| user_accuracy(lists.get(u), truth.relevant(u), k))
            .collect::<Result<_>>()?;
        for metric in Metric::USER {
            let v = neumaier_sum(per_user.iter().map(|a| a.get(metric).unwrap_or(0.0))) / users.len() as f64;
            map.insert((metric.name(), k), (metric, v));
        }
        let cat = catalog_metrics(lists, truth.history(), users, k)?;
        map.insert((Metric::Coverage.name(), k), (Metric::Coverage, cat.coverage));
        map.insert((Metric::Diversity.name(), k), (Metric::Diversity, cat.diversity));
        map.insert((Metric::Novelty.name(), k), (Metric::Novelty, cat.novelty));
    }
    Ok(MetricReport::from_map(users.len(), map))
}

/// Sorted-list intersection size, exposed for oracles.
pub fn hits(recs: &[u32], rel: &[u32]) -> usize {
    let mut r = recs.to_vec();
    r.sort_unstable();
    sorted_intersection_len(&r, rel)
}
