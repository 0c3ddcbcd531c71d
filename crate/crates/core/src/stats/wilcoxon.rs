use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use super::{average_ranks, bayesian_signed_rank, BayesTriplet};
use crate::matrix::MetricMatrix;
use crate::seed::derive_seed;
use crate::{Error, Result};

/// Largest number of non-zero differences handled by the exact null.
pub const EXACT_LIMIT: usize = 25;

/// Two-sided Wilcoxon signed-rank p-value. Zero differences are dropped;
/// all-zero input gives 1.
pub fn wilcoxon_signed_rank(diffs: &[f64]) -> Result<f64> {
    if diffs.iter().any(|d| !d.is_finite()) {
        return Err(Error::invalid("differences must be finite"));
    }
    let nz: Vec<f64> = diffs.iter().copied().filter(|&d| d != 0.0).collect();
    let n = nz.len();
    if n == 0 {
        return Ok(1.0);
    }
    let abs: Vec<f64> = nz.iter().map(|d| d.abs()).collect();
    let ranks = average_ranks(&abs);
    let w_plus: f64 = nz.iter().zip(&ranks).filter(|(d, _)| **d > 0.0).map(|(_, r)| r).sum();
    if n <= EXACT_LIMIT {
        Ok(exact_p(&ranks, w_plus))
    } else {
        Ok(normal_p(&ranks, w_plus))
    }
}

/// Exact null by dynamic programming over doubled (integer) ranks.
fn exact_p(ranks: &[f64], w_plus: f64) -> f64 {
    let doubled: Vec<usize> = ranks.iter().map(|r| (r * 2.0).round() as usize).collect();
    let total: usize = doubled.iter().sum();
    let mut counts = vec![0.0f64; total + 1];
    counts[0] = 1.0;
    let mut reach = 0;
    for &r in &doubled {
        for s in (0..=reach).rev() {
            if counts[s] > 0.0 {
                counts[s + r] += counts[s];
            }
        }
        reach += r;
    }
    let all = 2f64.powi(ranks.len() as i32);
    let w = (w_plus * 2.0).round() as usize;
    let lower: f64 = counts[..=w].iter().sum::<f64>() / all;
    let upper: f64 = counts[w..].iter().sum::<f64>() / all;
    (2.0 * lower.min(upper)).min(1.0)
}

/// Normal approximation with tie correction, no continuity correction.
fn normal_p(ranks: &[f64], w_plus: f64) -> f64 {
    let n = ranks.len() as f64;
    let mean = n * (n + 1.0) / 4.0;
    let mut sorted = ranks.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i + 1;
        while j < sorted.len() && sorted[j] == sorted[i] {
            j += 1;
        }
        let t = (j - i) as f64;
        tie_term += t * t * t - t;
        i = j;
    }
    let var = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0 - tie_term / 48.0;
    if var <= 0.0 {
        return 1.0;
    }
    let z = (w_plus - mean) / var.sqrt();
    let normal = Normal::standard();
    (2.0 * normal.sf(z.abs())).min(1.0)
}

/// Holm step-down adjustment; output is in input order.
pub fn holm(p: &[f64]) -> Vec<f64> {
    let m = p.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| p[a].total_cmp(&p[b]).then(a.cmp(&b)));
    let mut adjusted = vec![0.0; m];
    let mut running: f64 = 0.0;
    for (pos, &idx) in order.iter().enumerate() {
        let v = ((m - pos) as f64 * p[idx]).min(1.0);
        running = running.max(v);
        adjusted[idx] = running;
    }
    adjusted
}

/// Pairwise tests over the methods of one metric matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairwiseTestReport {
    pub methods: Vec<String>,
    pub alpha: f64,
    /// Raw two-sided Wilcoxon p-values; diagonal is 1.
    pub wilcoxon_raw: Vec<Vec<f64>>,
    /// Holm-adjusted p-values; diagonal is 1.
    pub wilcoxon_adjusted: Vec<Vec<f64>>,
    pub rope: f64,
    /// `[a][b]` holds the posterior for column a minus column b.
    pub bayesian: Option<Vec<Vec<BayesTriplet>>>,
}

impl PairwiseTestReport {
    pub fn wilcoxon_significant(&self, a: usize, b: usize) -> bool {
        self.wilcoxon_adjusted[a][b] < self.alpha
    }
}

fn pairs(m: usize) -> Vec<(usize, usize)> {
    (0..m).flat_map(|a| (a + 1..m).map(move |b| (a, b))).collect()
}

fn column_diffs(q: &MetricMatrix, a: usize, b: usize) -> Vec<f64> {
    (0..q.n_datasets()).map(|t| q.get(t, a) - q.get(t, b)).collect()
}

/// Wilcoxon signed-rank on every method pair with Holm correction at α = 0.05.
pub fn wilcoxon_holm(q: &MetricMatrix) -> Result<PairwiseTestReport> {
    let m = q.n_methods();
    if m < 2 {
        return Err(Error::invalid("pairwise tests need at least two methods"));
    }
    if q.n_datasets() < 5 {
        log::warn!("Wilcoxon test on only {} datasets has little power", q.n_datasets());
    }
    let ps = pairs(m);
    let raw: Vec<f64> = ps
        .iter()
        .map(|&(a, b)| wilcoxon_signed_rank(&column_diffs(q, a, b)))
        .collect::<Result<_>>()?;
    let adj = holm(&raw);
    let mut raw_m = vec![vec![1.0; m]; m];
    let mut adj_m = vec![vec![1.0; m]; m];
    for (n, &(a, b)) in ps.iter().enumerate() {
        raw_m[a][b] = raw[n];
        raw_m[b][a] = raw[n];
        adj_m[a][b] = adj[n];
        adj_m[b][a] = adj[n];
    }
    Ok(PairwiseTestReport {
        methods: q.methods().to_vec(),
        alpha: 0.05,
        wilcoxon_raw: raw_m,
        wilcoxon_adjusted: adj_m,
        rope: 0.0,
        bayesian: None,
    })
}

/// Wilcoxon-Holm plus the Bayesian signed-rank posterior for every pair.
pub fn pairwise_tests(q: &MetricMatrix, rope: f64, mc_samples: usize, seed: u64) -> Result<PairwiseTestReport> {
    let mut report = wilcoxon_holm(q)?;
    let m = q.n_methods();
    let ps = pairs(m);
    let post: Vec<BayesTriplet> = ps
        .par_iter()
        .map(|&(a, b)| {
            let s = derive_seed(seed, "bayes-pair", &[a as u64, b as u64]);
            bayesian_signed_rank(&column_diffs(q, a, b), rope, mc_samples, s)
        })
        .collect::<Result<_>>()?;
    let none = BayesTriplet {
        left: 0.0,
        rope: 1.0,
        right: 0.0,
    };
    let mut grid = vec![vec![none; m]; m];
    for (n, &(a, b)) in ps.iter().enumerate() {
        grid[a][b] = post[n];
        grid[b][a] = post[n].mirrored();
    }
    report.rope = rope;
    report.bayesian = Some(grid);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_tail_all_positive() {
        let d: Vec<f64> = (1..=10).map(f64::from).collect();
        let p = wilcoxon_signed_rank(&d).unwrap();
        assert!((p - 2.0 / 1024.0).abs() < 1e-15);
    }

    #[test]
    fn zeros_give_one() {
        assert_eq!(wilcoxon_signed_rank(&[0.0, 0.0]).unwrap(), 1.0);
    }

    #[test]
    fn holm_is_monotone_in_raw_order() {
        let raw = [0.01, 0.04, 0.03, 0.005];
        let adj = holm(&raw);
        for (a, e) in adj.iter().zip([0.03, 0.06, 0.06, 0.02]) {
            assert!((a - e).abs() < 1e-12);
        }
    }
}
