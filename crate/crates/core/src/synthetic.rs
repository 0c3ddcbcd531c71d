//! Seeded synthetic fixtures: interaction logs with planted item clusters,
//! random metric matrices, Gaussian blobs and a dataset-selection fixture.

use std::collections::BTreeSet;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::characteristics::{CharacteristicsTable, CharacteristicsVector};
use crate::corpus::{InteractionRecord, InteractionSet};
use crate::matrix::MetricMatrix;
use crate::seed::{derived_rng, Rng};
use crate::{Error, Result};

/// Matrix with entries uniform in `[0.01, 1)` and generic labels.
pub fn random_metric_matrix(rng: &mut Rng, d: usize, m: usize) -> Result<MetricMatrix> {
    let rows = (0..d)
        .map(|_| (0..m).map(|_| rng.random_range(0.01..1.0)).collect())
        .collect();
    MetricMatrix::from_rows(rows)
}

/// Shape of a clustered interaction log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClusteredSpec {
    pub users: usize,
    pub items: usize,
    pub clusters: usize,
    /// Probability that an interaction falls inside the user's cluster.
    pub in_cluster: f64,
    pub min_length: usize,
    pub max_length: usize,
    /// Zipf exponent of item popularity.
    pub zipf: f64,
    /// Timestamps are uniform in `[0, time_span)` milliseconds.
    pub time_span: i64,
}

impl Default for ClusteredSpec {
    fn default() -> Self {
        ClusteredSpec {
            users: 2000,
            items: 500,
            clusters: 10,
            in_cluster: 0.85,
            min_length: 10,
            max_length: 50,
            zipf: 1.0,
            time_span: 1_000_000_000,
        }
    }
}

/// Item `i` belongs to cluster `i % clusters`; each user draws mostly from
/// one cluster with Zipf popularity, the rest from the global Zipf law.
pub fn clustered_interactions(spec: &ClusteredSpec, seed: u64) -> Result<InteractionSet> {
    if spec.users == 0 || spec.clusters == 0 || spec.items < spec.clusters {
        return Err(Error::invalid("need users, clusters and at least one item per cluster"));
    }
    if spec.min_length == 0 || spec.min_length > spec.max_length || spec.max_length > spec.items {
        return Err(Error::invalid("history lengths must satisfy 1 <= min <= max <= items"));
    }
    if !(0.0..=1.0).contains(&spec.in_cluster) || spec.time_span <= 0 {
        return Err(Error::invalid("in-cluster probability must lie in [0, 1] and time span be positive"));
    }
    let weight = |rank: usize| 1.0 / ((rank + 1) as f64).powf(spec.zipf);
    let global = WeightedIndex::new((0..spec.items).map(weight)).map_err(|e| Error::invalid(e.to_string()))?;
    let members: Vec<Vec<usize>> = (0..spec.clusters)
        .map(|c| (c..spec.items).step_by(spec.clusters).collect())
        .collect();
    let local: Vec<WeightedIndex<f64>> = members
        .iter()
        .map(|m| WeightedIndex::new((0..m.len()).map(weight)).map_err(|e| Error::invalid(e.to_string())))
        .collect::<Result<_>>()?;
    let mut records = Vec::new();
    for u in 0..spec.users {
        let mut rng = derived_rng(seed, "clustered-user", &[u as u64]);
        let c = rng.random_range(0..spec.clusters);
        let len = rng.random_range(spec.min_length..=spec.max_length);
        let mut seen = BTreeSet::new();
        let mut attempts = 0;
        while seen.len() < len && attempts < 100 * len {
            attempts += 1;
            let item = if rng.random_bool(spec.in_cluster) {
                members[c][local[c].sample(&mut rng)]
            } else {
                global.sample(&mut rng)
            };
            if seen.insert(item) {
                let ts = rng.random_range(0..spec.time_span);
                records.push(InteractionRecord::new(format!("u{u}"), format!("i{item}"), 1.0, ts));
            }
        }
    }
    Ok(InteractionSet::new(records))
}

/// `per_blob` Gaussian points around each center with the given spread.
pub fn gaussian_blobs(rng: &mut Rng, centers: &[Vec<f64>], per_blob: usize, spread: f64) -> (Vec<Vec<f64>>, Vec<usize>) {
    let mut points = Vec::new();
    let mut labels = Vec::new();
    for (c, center) in centers.iter().enumerate() {
        for _ in 0..per_blob {
            points.push(
                center
                    .iter()
                    .map(|&x| x + spread * rng.sample::<f64, _>(StandardNormal))
                    .collect(),
            );
            labels.push(c);
        }
    }
    (points, labels)
}

/// `count` random centers in `dim` dimensions with coordinates `N(0, scale²)`.
pub fn random_centers(rng: &mut Rng, count: usize, dim: usize, scale: f64) -> Vec<Vec<f64>> {
    (0..count)
        .map(|_| (0..dim).map(|_| scale * rng.sample::<f64, _>(StandardNormal)).collect())
        .collect()
}

/// Datasets with planted clusters in feature space whose method rankings
/// follow the cluster and drift with distance from the cluster center.
#[derive(Clone, Debug, PartialEq)]
pub struct SelectionFixture {
    pub features: CharacteristicsTable,
    /// `(column label, matrix)` pairs sharing the feature table's rows.
    pub metrics: Vec<(String, MetricMatrix)>,
    pub clusters: Vec<usize>,
}

pub const FIXTURE_CLUSTERS: usize = 6;
pub const FIXTURE_PER_CLUSTER: usize = 5;
pub const FIXTURE_METHODS: usize = 11;
const FIXTURE_OFFSETS: [f64; FIXTURE_PER_CLUSTER] = [0.2, 0.7, 1.2, 1.8, 8.0];

pub fn selection_fixture(seed: u64) -> Result<SelectionFixture> {
    let mut rng = derived_rng(seed, "selection-fixture", &[]);
    let centers = random_centers(&mut rng, FIXTURE_CLUSTERS, 18, 4.0);
    let mut features = CharacteristicsTable::default();
    let mut clusters = Vec::new();
    let mut offsets = Vec::new();
    for (c, center) in centers.iter().enumerate() {
        for (j, &r) in FIXTURE_OFFSETS.iter().enumerate() {
            // The farthest member sits radially outside its cluster.
            let dir: Vec<f64> = if j + 1 == FIXTURE_PER_CLUSTER {
                center.clone()
            } else {
                (0..18).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
            };
            let norm = dir.iter().map(|x| x * x).sum::<f64>().sqrt();
            let mut values = [0.0; 18];
            for k in 0..18 {
                values[k] = center[k] + r * dir[k] / norm;
            }
            features
                .rows
                .push((format!("ds{:02}", c * FIXTURE_PER_CLUSTER + j), CharacteristicsVector::from_array(values)));
            clusters.push(c);
            offsets.push(r);
        }
    }
    let datasets = features.labels();
    let methods: Vec<String> = (0..FIXTURE_METHODS).map(|i| format!("M{i:02}")).collect();
    let global: Vec<f64> = (0..FIXTURE_METHODS).map(|i| 0.1 + 0.02 * i as f64).collect();
    let specs = [("nDCG@10", 1.0), ("HitRate@10", 2.5), ("Coverage", 3.0)];
    let mut metrics = Vec::new();
    for (label, scale) in specs {
        let pattern: Vec<Vec<f64>> = (0..FIXTURE_CLUSTERS)
            .map(|_| (0..FIXTURE_METHODS).map(|_| 0.08 * rng.sample::<f64, _>(StandardNormal)).collect())
            .collect();
        let rows: Vec<Vec<f64>> = (0..datasets.len())
            .map(|t| {
                (0..FIXTURE_METHODS)
                    .map(|i| {
                        let noise = 0.04 * offsets[t] * rng.sample::<f64, _>(StandardNormal);
                        (scale * (global[i] + pattern[clusters[t]][i] + noise)).max(0.001)
                    })
                    .collect()
            })
            .collect();
        metrics.push((label.to_string(), MetricMatrix::new(datasets.clone(), methods.clone(), rows)?));
    }
    Ok(SelectionFixture {
        features,
        metrics,
        clusters,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng;

    #[test]
    fn random_matrix_range() {
        let q = random_metric_matrix(&mut rng(1), 4, 3).unwrap();
        assert!(q.rows().flatten().all(|&v| (0.01..1.0).contains(&v)));
    }

    #[test]
    fn clustered_log_shape() {
        let spec = ClusteredSpec {
            users: 50,
            items: 40,
            clusters: 4,
            max_length: 30,
            ..ClusteredSpec::default()
        };
        let data = clustered_interactions(&spec, 3).unwrap();
        assert_eq!(data.n_users(), 50);
        assert!(data.n_items() <= 40);
        let m = data.to_matrix();
        for u in 0..50 {
            assert!(m.row(u).len() >= 10);
        }
        assert_eq!(data, clustered_interactions(&spec, 3).unwrap());
    }

    #[test]
    fn fixture_shape() {
        let f = selection_fixture(0).unwrap();
        assert_eq!(f.features.rows.len(), 30);
        assert_eq!(f.metrics.len(), 3);
        assert!(f.metrics.iter().all(|(_, q)| q.n_methods() == 11 && q.rows().flatten().all(|&v| v >= 0.001)));
    }
}
