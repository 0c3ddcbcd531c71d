use rand::seq::index::sample;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::FeatureTable;
use crate::seed::{derived_rng, Rng as SeedRng};
use crate::{Error, Result};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IsolationForestOptions {
    pub trees: usize,
    pub subsample: usize,
    pub contamination: f64,
}

impl Default for IsolationForestOptions {
    fn default() -> Self {
        IsolationForestOptions {
            trees: 100,
            subsample: 256,
            contamination: 0.15,
        }
    }
}

/// Average path length of an unsuccessful BST search among `n` points.
fn c(n: usize) -> f64 {
    match n {
        0 | 1 => 0.0,
        2 => 1.0,
        _ => {
            let n = n as f64;
            2.0 * ((n - 1.0).ln() + EULER_GAMMA) - 2.0 * (n - 1.0) / n
        }
    }
}

enum Node {
    Leaf { size: usize },
    Split { dim: usize, at: f64, left: Box<Node>, right: Box<Node> },
}

fn build(points: &[&[f64]], depth: usize, limit: usize, rng: &mut SeedRng) -> Node {
    if points.len() <= 1 || depth >= limit {
        return Node::Leaf { size: points.len() };
    }
    let p = points[0].len();
    let ranges: Vec<(usize, f64, f64)> = (0..p)
        .filter_map(|d| {
            let lo = points.iter().map(|x| x[d]).fold(f64::INFINITY, f64::min);
            let hi = points.iter().map(|x| x[d]).fold(f64::NEG_INFINITY, f64::max);
            (hi > lo).then_some((d, lo, hi))
        })
        .collect();
    if ranges.is_empty() {
        return Node::Leaf { size: points.len() };
    }
    let (dim, lo, hi) = ranges[rng.random_range(0..ranges.len())];
    let at = rng.random_range(lo..hi);
    let (l, r): (Vec<&[f64]>, Vec<&[f64]>) = points.iter().partition(|x| x[dim] < at);
    Node::Split {
        dim,
        at,
        left: Box::new(build(&l, depth + 1, limit, rng)),
        right: Box::new(build(&r, depth + 1, limit, rng)),
    }
}

fn path_length(node: &Node, x: &[f64], depth: usize) -> f64 {
    match node {
        Node::Leaf { size } => depth as f64 + c(*size),
        Node::Split { dim, at, left, right } => {
            if x[*dim] < *at {
                path_length(left, x, depth + 1)
            } else {
                path_length(right, x, depth + 1)
            }
        }
    }
}

/// Anomaly score `2^(−E[h(x)] / c(ψ))` of every row.
pub fn isolation_scores(f: &FeatureTable, opts: &IsolationForestOptions, seed: u64) -> Result<Vec<f64>> {
    let n = f.n_rows();
    if n < 4 {
        return Err(Error::invalid(format!("isolation forest needs at least 4 rows, got {n}")));
    }
    if opts.trees == 0 || opts.subsample < 2 {
        return Err(Error::invalid("isolation forest needs trees ≥ 1 and subsample ≥ 2"));
    }
    let psi = opts.subsample.min(n);
    let limit = (psi as f64).log2().ceil() as usize;
    let per_tree: Vec<Vec<f64>> = (0..opts.trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = derived_rng(seed, "isolation-forest", &[t as u64]);
            let idx = sample(&mut rng, n, psi).into_vec();
            let pts: Vec<&[f64]> = idx.iter().map(|&i| f.values[i].as_slice()).collect();
            let tree = build(&pts, 0, limit, &mut rng);
            f.values.iter().map(|x| path_length(&tree, x, 0)).collect()
        })
        .collect();
    let norm = c(psi);
    Ok((0..n)
        .map(|i| {
            let mean = per_tree.iter().map(|h| h[i]).sum::<f64>() / opts.trees as f64;
            2f64.powf(-mean / norm)
        })
        .collect())
}

/// Number of rows flagged at a given contamination: `⌈c·n⌉`.
pub fn outlier_count(n: usize, contamination: f64) -> usize {
    ((contamination * n as f64) - 1e-9).ceil().max(0.0) as usize
}

/// Indices of the `count` highest scores, ties to the lower index; ascending.
pub fn top_scores(scores: &[f64], count: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let mut out: Vec<usize> = order.into_iter().take(count).collect();
    out.sort_unstable();
    out
}

/// Flags the `⌈contamination·n⌉` most anomalous rows.
pub fn isolation_forest_outliers(f: &FeatureTable, opts: &IsolationForestOptions, seed: u64) -> Result<Vec<usize>> {
    if !(0.0..0.5).contains(&opts.contamination) {
        return Err(Error::invalid(format!(
            "contamination must lie in [0, 0.5), got {}",
            opts.contamination
        )));
    }
    let scores = isolation_scores(f, opts, seed)?;
    Ok(top_scores(&scores, outlier_count(f.n_rows(), opts.contamination)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_normalizer() {
        assert_eq!(c(2), 1.0);
        assert!((c(256) - 10.244).abs() < 1e-3);
    }

    #[test]
    fn counts() {
        assert_eq!(outlier_count(30, 0.15), 5);
        assert_eq!(outlier_count(10, 0.1), 1);
        assert_eq!(outlier_count(10, 0.0), 0);
    }
}
