//! Correlation measures, paired significance tests and CD-diagram data.

mod bayes;
mod cd;
mod wilcoxon;

pub use bayes::{bayesian_signed_rank, BayesTriplet};
pub use cd::{cd_diagram_data, maximal_cliques, CdDiagramData, BAYES_SIGNIFICANCE};
pub use wilcoxon::{holm, pairwise_tests, wilcoxon_holm, wilcoxon_signed_rank, PairwiseTestReport, EXACT_LIMIT};

use crate::{Error, Result};

/// Ascending ranks starting at 1; tied values share their average rank.
pub fn average_ranks(x: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut ranks = vec![0.0; x.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && x[order[end]] == x[order[start]] {
            end += 1;
        }
        // Positions start..end hold ranks start+1..=end.
        let avg = (start + 1 + end) as f64 / 2.0;
        for &o in &order[start..end] {
            ranks[o] = avg;
        }
        start = end;
    }
    ranks
}

fn check_pair(x: &[f64], y: &[f64], min: usize) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::invalid(format!("length mismatch: {} vs {}", x.len(), y.len())));
    }
    if x.len() < min {
        return Err(Error::invalid(format!("need at least {min} observations, got {}", x.len())));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::invalid("observations must be finite"));
    }
    Ok(())
}

fn pearson_unchecked(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        log::warn!("correlation of a constant vector is defined as 0");
        return 0.0;
    }
    (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0)
}

/// Pearson product-moment correlation; 0 when either vector is constant.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    check_pair(x, y, 2)?;
    Ok(pearson_unchecked(x, y))
}

/// Spearman rank correlation (Pearson of average-tie ranks); 0 when either
/// vector is constant.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64> {
    check_pair(x, y, 2)?;
    Ok(pearson_unchecked(&average_ranks(x), &average_ranks(y)))
}

/// Default bin count for mutual information: `min(⌈√n⌉, 10)`.
pub fn default_bins(n: usize) -> usize {
    ((n as f64).sqrt().ceil() as usize).clamp(1, 10)
}

/// Equal-frequency bin of each value. Tied values share the bin of their
/// first sorted position.
fn quantile_bins(x: &[f64], bins: usize) -> Vec<usize> {
    let n = x.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut out = vec![0; n];
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && x[order[end]] == x[order[start]] {
            end += 1;
        }
        let bin = (start * bins / n).min(bins - 1);
        for &o in &order[start..end] {
            out[o] = bin;
        }
        start = end;
    }
    out
}

/// Plug-in mutual information in bits after quantile binning of each axis.
pub fn mutual_information(x: &[f64], y: &[f64], bins: Option<usize>) -> Result<f64> {
    check_pair(x, y, 4)?;
    let n = x.len();
    let bins = bins.unwrap_or_else(|| default_bins(n));
    if bins == 0 {
        return Err(Error::invalid("bin count must be positive"));
    }
    let bx = quantile_bins(x, bins);
    let by = quantile_bins(y, bins);
    let mut joint = vec![vec![0usize; bins]; bins];
    let mut px = vec![0usize; bins];
    let mut py = vec![0usize; bins];
    for (&a, &b) in bx.iter().zip(&by) {
        joint[a][b] += 1;
        px[a] += 1;
        py[b] += 1;
    }
    let nf = n as f64;
    let mut mi = 0.0;
    for a in 0..bins {
        for b in 0..bins {
            let c = joint[a][b];
            if c > 0 {
                let pxy = c as f64 / nf;
                mi += pxy * (pxy / ((px[a] as f64 / nf) * (py[b] as f64 / nf))).log2();
            }
        }
    }
    Ok(mi.max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranks_average_ties() {
        assert_eq!(average_ranks(&[0.3, 0.1, 0.2]), vec![3.0, 1.0, 2.0]);
        assert_eq!(average_ranks(&[0.2, 0.2, 0.1]), vec![2.5, 2.5, 1.0]);
    }

    #[test]
    fn spearman_examples() {
        assert_eq!(spearman(&[1.0, 2.0, 3.0], &[10.0, 20.0, 30.0]).unwrap(), 1.0);
        assert_eq!(spearman(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap(), -1.0);
        let r = spearman(&[1.0, 2.0, 3.0, 4.0], &[1.0, 3.0, 2.0, 4.0]).unwrap();
        assert!((r - 0.8).abs() < 1e-12);
        assert_eq!(spearman(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]).unwrap(), 0.0);
        assert!(spearman(&[1.0], &[1.0]).is_err());
    }

    #[test]
    fn pearson_affine() {
        let x = [0.5, 1.0, 4.0, -2.0];
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v + 1.0).collect();
        assert!((pearson(&x, &y).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mi_of_identity_reaches_log_bins() {
        let x: Vec<f64> = (0..100).map(|i| (i as f64 * 0.37).sin()).collect();
        let mi = mutual_information(&x, &x, Some(5)).unwrap();
        assert!(mi >= 5f64.log2() - 1e-9);
        assert_eq!(mutual_information(&[1.0; 8], &x[..8], None).unwrap(), 0.0);
    }
}
