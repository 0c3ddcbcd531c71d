//! Principal dataset subsets: pick a few datasets whose leaderboard agrees
//! with the full benchmark.
//!
//! Three selectors are provided: uniform random subsets, a KMeans pipeline
//! (standardize, PCA, isolation-forest outlier removal, clustering, nearest
//! dataset to each centroid) and greedy A-/D-optimal experimental design.

mod design;
mod fidelity;
mod iforest;
mod kmeans;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

pub use design::{a_criterion, d_criterion, greedy_design, optimal_design_select, DesignCriterion, DEFAULT_DESIGN_RESTARTS};
pub use fidelity::{fidelity_table, selection_fidelity, FidelityOptions, FidelityTable, SelectorKind};
pub use iforest::{isolation_forest_outliers, isolation_scores, outlier_count, top_scores, IsolationForestOptions};
pub use kmeans::{davies_bouldin, kmeans, kmeans_cluster, silhouette, KMeansChoice, KMeansFit};

use crate::characteristics::{CharacteristicsTable, NAMES};
use crate::seed::derived_rng;
use crate::{Error, Result};

/// Datasets × features.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureTable {
    pub rows: Vec<String>,
    pub columns: Vec<String>,
    pub values: Vec<Vec<f64>>,
}

impl FeatureTable {
    pub fn new(rows: Vec<String>, columns: Vec<String>, values: Vec<Vec<f64>>) -> Result<Self> {
        if values.len() != rows.len() {
            return Err(Error::invalid(format!("{} value rows for {} labels", values.len(), rows.len())));
        }
        if values.iter().any(|r| r.len() != columns.len()) {
            return Err(Error::invalid("ragged feature table"));
        }
        if values.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::invalid("feature values must be finite"));
        }
        Ok(FeatureTable { rows, columns, values })
    }

    pub fn from_characteristics(table: &CharacteristicsTable) -> Result<Self> {
        FeatureTable::new(
            table.labels(),
            NAMES.iter().map(|s| s.to_string()).collect(),
            table.rows.iter().map(|(_, v)| v.to_array().to_vec()).collect(),
        )
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n_rows(), self.n_cols(), |r, c| self.values[r][c])
    }

    fn with_values(&self, columns: Vec<String>, m: &DMatrix<f64>) -> FeatureTable {
        FeatureTable {
            rows: self.rows.clone(),
            columns,
            values: (0..m.nrows()).map(|r| m.row(r).iter().copied().collect()).collect(),
        }
    }
}

/// Column z-scores with population standard deviation. Constant columns
/// are dropped.
pub fn standardize(f: &FeatureTable) -> Result<FeatureTable> {
    let n = f.n_rows();
    if n == 0 {
        return Err(Error::Empty("feature table has no rows".into()));
    }
    let mut columns = Vec::new();
    let mut cols = Vec::new();
    for (c, name) in f.columns.iter().enumerate() {
        let x: Vec<f64> = f.values.iter().map(|r| r[c]).collect();
        let mean = x.iter().sum::<f64>() / n as f64;
        let sd = (x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64).sqrt();
        let scale = x.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if sd <= 1e-12 * scale || sd == 0.0 {
            log::warn!("feature {name} is constant and was dropped");
            continue;
        }
        columns.push(name.clone());
        cols.push(x.iter().map(|v| (v - mean) / sd).collect::<Vec<f64>>());
    }
    if cols.is_empty() {
        return Err(Error::degenerate("every feature column is constant"));
    }
    let values = (0..n).map(|r| cols.iter().map(|c| c[r]).collect()).collect();
    Ok(FeatureTable {
        rows: f.rows.clone(),
        columns,
        values,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Pca {
    pub table: FeatureTable,
    /// Explained-variance share of every component, descending.
    pub explained: Vec<f64>,
    pub retained: usize,
    /// Loadings of the retained components, one vector per component.
    pub components: Vec<Vec<f64>>,
}

/// Projects onto the fewest leading principal components whose explained
/// variance reaches `variance_target`. Each component's largest-magnitude
/// loading is made positive.
pub fn pca(f: &FeatureTable, variance_target: f64) -> Result<Pca> {
    if !(variance_target > 0.0 && variance_target <= 1.0) {
        return Err(Error::invalid(format!("variance target must lie in (0, 1], got {variance_target}")));
    }
    let x = f.to_matrix();
    let n = x.nrows();
    let p = x.ncols();
    if n == 0 || p == 0 {
        return Err(Error::Empty("feature table is empty".into()));
    }
    let mut centered = x.clone();
    for c in 0..p {
        let mean = centered.column(c).mean();
        centered.column_mut(c).add_scalar_mut(-mean);
    }
    let cov = centered.transpose() * &centered / n as f64;
    let eig = SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let values: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k].max(0.0)).collect();
    let total: f64 = values.iter().sum();
    if total <= 0.0 {
        return Err(Error::degenerate("features have zero variance"));
    }
    let explained: Vec<f64> = values.iter().map(|v| v / total).collect();
    let mut retained = p;
    let mut acc = 0.0;
    for (k, share) in explained.iter().enumerate() {
        acc += share;
        if acc >= variance_target - 1e-12 {
            retained = k + 1;
            break;
        }
    }
    let mut components = Vec::with_capacity(retained);
    for &k in &order[..retained] {
        let mut v: Vec<f64> = eig.eigenvectors.column(k).iter().copied().collect();
        let lead = v
            .iter()
            .copied()
            .fold(0.0f64, |a, x| if x.abs() > a.abs() { x } else { a });
        if lead < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
        components.push(v);
    }
    let w = DMatrix::from_fn(p, retained, |r, c| components[c][r]);
    let projected = centered * w;
    let names = (1..=retained).map(|k| format!("PC{k}")).collect();
    Ok(Pca {
        table: f.with_values(names, &projected),
        explained,
        retained,
        components,
    })
}

/// Outcome of a subset selector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    pub method: String,
    /// Chosen row indices, ascending.
    pub indices: Vec<usize>,
    pub labels: Vec<String>,
    pub criterion_name: Option<String>,
    pub criterion: Option<f64>,
    /// Cluster of every row, when the selector clusters.
    pub assignment: Option<Vec<usize>>,
    pub outliers: Vec<usize>,
}

impl SelectionResult {
    fn plain(method: &str, mut indices: Vec<usize>, rows: &[String]) -> Self {
        indices.sort_unstable();
        SelectionResult {
            method: method.into(),
            labels: indices.iter().map(|&i| rows[i].clone()).collect(),
            indices,
            criterion_name: None,
            criterion: None,
            assignment: None,
            outliers: Vec::new(),
        }
    }

    /// `dataset,cluster` table of the assignment.
    pub fn assignment_csv(&self, rows: &[String]) -> Option<String> {
        let a = self.assignment.as_ref()?;
        let mut out = String::from("dataset,cluster,selected,outlier\n");
        for (r, label) in rows.iter().enumerate() {
            out.push_str(&format!(
                "{label},{},{},{}\n",
                a[r],
                u8::from(self.indices.contains(&r)),
                u8::from(self.outliers.contains(&r))
            ));
        }
        Some(out)
    }
}

/// Uniform subset of `target_count` of `n` rows.
pub fn random_select(rows: &[String], target_count: usize, seed: u64) -> Result<SelectionResult> {
    let n = rows.len();
    if target_count == 0 || target_count > n {
        return Err(Error::invalid(format!("target count must lie in 1..={n}")));
    }
    let mut rng = derived_rng(seed, "random-select", &[]);
    let idx = sample(&mut rng, n, target_count).into_vec();
    Ok(SelectionResult::plain("Random", idx, rows))
}

/// Options of the KMeans selection pipeline.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KMeansPipelineOptions {
    pub variance_target: f64,
    pub forest: IsolationForestOptions,
    pub restarts: usize,
}

impl Default for KMeansPipelineOptions {
    fn default() -> Self {
        KMeansPipelineOptions {
            variance_target: 0.95,
            forest: IsolationForestOptions::default(),
            restarts: 10,
        }
    }
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum()
}

/// Standardize, reduce with PCA, drop isolation-forest outliers, cluster
/// the inliers into `target_count` groups and pick the inlier nearest each
/// centroid. Outliers still receive their nearest cluster label.
pub fn select_principal_kmeans(
    f: &FeatureTable,
    target_count: usize,
    seed: u64,
    opts: &KMeansPipelineOptions,
) -> Result<SelectionResult> {
    let n = f.n_rows();
    if target_count == 0 || target_count > n {
        return Err(Error::invalid(format!("target count must lie in 1..={n}")));
    }
    if target_count == n {
        let mut r = SelectionResult::plain("KMeans", (0..n).collect(), &f.rows);
        r.assignment = Some((0..n).collect());
        return Ok(r);
    }
    let reduced = pca(&standardize(f)?, opts.variance_target)?.table;
    // Keep enough inliers to form every cluster.
    let outliers = if n >= 4 {
        let scores = isolation_scores(&reduced, &opts.forest, seed)?;
        let wanted = outlier_count(n, opts.forest.contamination);
        top_scores(&scores, wanted.min(n - target_count))
    } else {
        Vec::new()
    };
    let inliers: Vec<usize> = (0..n).filter(|r| !outliers.contains(r)).collect();
    let points: Vec<Vec<f64>> = inliers.iter().map(|&r| reduced.values[r].clone()).collect();
    let fit = kmeans(&points, target_count, opts.restarts, derive(seed, "kmeans"))?;
    let mut chosen = Vec::new();
    for c in 0..target_count {
        let best = (0..points.len())
            .filter(|&p| fit.assignment[p] == c)
            .min_by(|&a, &b| {
                squared_distance(&points[a], &fit.centroids[c])
                    .total_cmp(&squared_distance(&points[b], &fit.centroids[c]))
                    .then(a.cmp(&b))
            });
        if let Some(p) = best {
            chosen.push(inliers[p]);
        }
    }
    let assignment: Vec<usize> = (0..n)
        .map(|r| {
            (0..target_count)
                .min_by(|&a, &b| {
                    squared_distance(&reduced.values[r], &fit.centroids[a])
                        .total_cmp(&squared_distance(&reduced.values[r], &fit.centroids[b]))
                })
                .expect("at least one cluster")
        })
        .collect();
    let sil = if target_count >= 2 && target_count < points.len() {
        silhouette(&points, &fit.assignment).ok()
    } else {
        None
    };
    let mut r = SelectionResult::plain("KMeans", chosen, &f.rows);
    r.criterion_name = Some("silhouette".into());
    r.criterion = sil;
    r.assignment = Some(assignment);
    r.outliers = outliers;
    Ok(r)
}

fn derive(seed: u64, stage: &str) -> u64 {
    crate::seed::derive_seed(seed, stage, &[])
}
