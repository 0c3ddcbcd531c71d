use serde::{Deserialize, Serialize};

use super::mean;
use crate::matrix::MetricMatrix;
use crate::stats::spearman;
use crate::{Error, Result};

/// Metric-by-metric Spearman correlation averaged over datasets.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationMatrix {
    pub labels: Vec<String>,
    pub values: Vec<Vec<f64>>,
    /// `(dataset, metric)` pairs constant across methods; they contribute 0.
    pub constant: Vec<(String, String)>,
}

/// Per dataset, correlates every pair of metrics across methods, then
/// averages over datasets. `matrices` hold one metric each over the same
/// datasets and methods.
pub fn metric_correlation(matrices: &[MetricMatrix]) -> Result<CorrelationMatrix> {
    let first = matrices
        .first()
        .ok_or_else(|| Error::invalid("need at least one metric matrix"))?;
    if first.n_methods() < 3 {
        return Err(Error::invalid("metric correlation needs at least 3 methods"));
    }
    for q in matrices {
        if q.datasets() != first.datasets() || q.methods() != first.methods() {
            return Err(Error::invalid(format!("matrix {} has different labels", q.name())));
        }
    }
    let n = matrices.len();
    let d = first.n_datasets();
    let mut constant = Vec::new();
    let mut is_const = vec![vec![false; n]; d];
    for (t, flags) in is_const.iter_mut().enumerate() {
        for (a, q) in matrices.iter().enumerate() {
            let row = q.row(t);
            if row.iter().all(|&v| v == row[0]) {
                flags[a] = true;
                constant.push((first.datasets()[t].clone(), q.name()));
            }
        }
    }
    if !constant.is_empty() {
        log::warn!("{} dataset/metric rows are constant across methods", constant.len());
    }
    let mut values = vec![vec![0.0; n]; n];
    for a in 0..n {
        values[a][a] = 1.0;
        for b in a + 1..n {
            let per_dataset: Vec<f64> = (0..d)
                .map(|t| {
                    if is_const[t][a] || is_const[t][b] {
                        0.0
                    } else {
                        spearman(matrices[a].row(t), matrices[b].row(t)).unwrap_or(0.0)
                    }
                })
                .collect();
            let v = mean(&per_dataset);
            values[a][b] = v;
            values[b][a] = v;
        }
    }
    Ok(CorrelationMatrix {
        labels: matrices.iter().map(MetricMatrix::name).collect(),
        values,
        constant,
    })
}
