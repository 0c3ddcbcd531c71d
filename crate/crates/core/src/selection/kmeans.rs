use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::squared_distance;
use crate::seed::{derived_rng, Rng as SeedRng};
use crate::{Error, Result};

const MAX_ITER: usize = 300;
const SHIFT_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KMeansFit {
    pub k: usize,
    pub assignment: Vec<usize>,
    pub centroids: Vec<Vec<f64>>,
    pub inertia: f64,
    pub iterations: usize,
}

fn nearest(x: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, m) in centroids.iter().enumerate() {
        let d = squared_distance(x, m);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn plus_plus(points: &[Vec<f64>], k: usize, rng: &mut SeedRng) -> Vec<Vec<f64>> {
    let n = points.len();
    let mut centroids = vec![points[rng.random_range(0..n)].clone()];
    let mut d2: Vec<f64> = points.iter().map(|p| squared_distance(p, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut u = rng.random_range(0.0..total);
            let mut idx = n - 1;
            for (i, &w) in d2.iter().enumerate() {
                if u < w {
                    idx = i;
                    break;
                }
                u -= w;
            }
            idx
        } else {
            rng.random_range(0..n)
        };
        centroids.push(points[pick].clone());
        for (i, p) in points.iter().enumerate() {
            d2[i] = d2[i].min(squared_distance(p, &centroids[centroids.len() - 1]));
        }
    }
    centroids
}

fn lloyd(points: &[Vec<f64>], mut centroids: Vec<Vec<f64>>) -> KMeansFit {
    let k = centroids.len();
    let p = points[0].len();
    let mut assignment = vec![0; points.len()];
    let mut iterations = 0;
    for it in 0..MAX_ITER {
        iterations = it + 1;
        for (i, x) in points.iter().enumerate() {
            assignment[i] = nearest(x, &centroids).0;
        }
        let mut sums = vec![vec![0.0; p]; k];
        let mut counts = vec![0usize; k];
        for (x, &a) in points.iter().zip(&assignment) {
            counts[a] += 1;
            for (s, v) in sums[a].iter_mut().zip(x) {
                *s += v;
            }
        }
        let mut next: Vec<Vec<f64>> = Vec::with_capacity(k);
        for c in 0..k {
            if counts[c] > 0 {
                next.push(sums[c].iter().map(|s| s / counts[c] as f64).collect());
            } else {
                next.push(centroids[c].clone());
            }
        }
        // Re-seed empty clusters at the point farthest from its centroid.
        for c in 0..k {
            if counts[c] == 0 {
                let far = (0..points.len())
                    .max_by(|&a, &b| {
                        squared_distance(&points[a], &next[assignment[a]])
                            .total_cmp(&squared_distance(&points[b], &next[assignment[b]]))
                            .then(b.cmp(&a))
                    })
                    .expect("points non-empty");
                next[c] = points[far].clone();
                assignment[far] = c;
            }
        }
        let shift = centroids
            .iter()
            .zip(&next)
            .map(|(a, b)| squared_distance(a, b).sqrt())
            .fold(0.0, f64::max);
        centroids = next;
        if shift < SHIFT_TOL {
            break;
        }
    }
    for (i, x) in points.iter().enumerate() {
        assignment[i] = nearest(x, &centroids).0;
    }
    let inertia = points
        .iter()
        .zip(&assignment)
        .map(|(x, &a)| squared_distance(x, &centroids[a]))
        .sum();
    KMeansFit {
        k,
        assignment,
        centroids,
        inertia,
        iterations,
    }
}

/// k-means++ seeding and Lloyd iterations, best of `restarts` by inertia.
pub fn kmeans(points: &[Vec<f64>], k: usize, restarts: usize, seed: u64) -> Result<KMeansFit> {
    if points.is_empty() {
        return Err(Error::Empty("no points to cluster".into()));
    }
    if k == 0 || k > points.len() {
        return Err(Error::invalid(format!("k must lie in 1..={}", points.len())));
    }
    let fits: Vec<KMeansFit> = (0..restarts.max(1))
        .into_par_iter()
        .map(|r| {
            let mut rng = derived_rng(seed, "kmeans-restart", &[k as u64, r as u64]);
            lloyd(points, plus_plus(points, k, &mut rng))
        })
        .collect();
    let mut best = 0;
    for (i, f) in fits.iter().enumerate() {
        if f.inertia < fits[best].inertia {
            best = i;
        }
    }
    Ok(fits.into_iter().nth(best).expect("at least one restart"))
}

/// Mean silhouette coefficient. Points in singleton clusters score 0.
pub fn silhouette(points: &[Vec<f64>], assignment: &[usize]) -> Result<f64> {
    let n = points.len();
    let k = assignment.iter().max().map_or(0, |m| m + 1);
    let sizes = (0..k).map(|c| assignment.iter().filter(|&&a| a == c).count()).collect::<Vec<_>>();
    if sizes.iter().filter(|&&s| s > 0).count() < 2 {
        return Err(Error::degenerate("silhouette needs at least two non-empty clusters"));
    }
    let dist: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| squared_distance(&points[i], &points[j]).sqrt()).collect())
        .collect();
    if dist.iter().flatten().all(|&d| d == 0.0) {
        return Err(Error::degenerate("silhouette is undefined when all points coincide"));
    }
    let mut total = 0.0;
    for i in 0..n {
        let own = assignment[i];
        if sizes[own] <= 1 {
            continue;
        }
        let mut sums = vec![0.0; k];
        for j in 0..n {
            sums[assignment[j]] += dist[i][j];
        }
        let a = sums[own] / (sizes[own] - 1) as f64;
        let b = (0..k)
            .filter(|&c| c != own && sizes[c] > 0)
            .map(|c| sums[c] / sizes[c] as f64)
            .fold(f64::INFINITY, f64::min);
        let denom = a.max(b);
        if denom > 0.0 {
            total += (b - a) / denom;
        }
    }
    Ok(total / n as f64)
}

/// Davies–Bouldin index (lower is better).
pub fn davies_bouldin(points: &[Vec<f64>], assignment: &[usize], centroids: &[Vec<f64>]) -> f64 {
    let k = centroids.len();
    let scatter: Vec<f64> = (0..k)
        .map(|c| {
            let members: Vec<&Vec<f64>> = points.iter().zip(assignment).filter(|(_, &a)| a == c).map(|(p, _)| p).collect();
            if members.is_empty() {
                0.0
            } else {
                members.iter().map(|p| squared_distance(p, &centroids[c]).sqrt()).sum::<f64>() / members.len() as f64
            }
        })
        .collect();
    let mut total = 0.0;
    for i in 0..k {
        let mut worst: f64 = 0.0;
        for j in 0..k {
            if i == j {
                continue;
            }
            let sep = squared_distance(&centroids[i], &centroids[j]).sqrt();
            let r = if sep > 0.0 { (scatter[i] + scatter[j]) / sep } else { f64::INFINITY };
            worst = worst.max(r);
        }
        total += worst;
    }
    total / k as f64
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KMeansChoice {
    pub fit: KMeansFit,
    pub silhouette: f64,
    pub davies_bouldin: f64,
    /// `(k, silhouette, davies_bouldin)` for every k tried.
    pub scores: Vec<(usize, f64, f64)>,
}

/// Clusters for every k in `k_range` and keeps the k with the highest
/// silhouette, then the lowest Davies–Bouldin index, then the smallest k.
pub fn kmeans_cluster(points: &[Vec<f64>], k_range: &[usize], restarts: usize, seed: u64) -> Result<KMeansChoice> {
    let n = points.len();
    if k_range.is_empty() || k_range.iter().any(|&k| k < 2 || k + 1 > n) {
        return Err(Error::invalid(format!("every k must lie in 2..={}", n.saturating_sub(1))));
    }
    let mut best: Option<KMeansChoice> = None;
    let mut scores = Vec::new();
    let mut ks = k_range.to_vec();
    ks.sort_unstable();
    ks.dedup();
    for k in ks {
        let fit = kmeans(points, k, restarts, seed)?;
        let sil = silhouette(points, &fit.assignment)?;
        let db = davies_bouldin(points, &fit.assignment, &fit.centroids);
        scores.push((k, sil, db));
        let better = match &best {
            None => true,
            Some(b) => sil > b.silhouette || (sil == b.silhouette && db < b.davies_bouldin),
        };
        if better {
            best = Some(KMeansChoice {
                fit,
                silhouette: sil,
                davies_bouldin: db,
                scores: Vec::new(),
            });
        }
    }
    let mut choice = best.expect("k_range non-empty");
    choice.scores = scores;
    Ok(choice)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coincident_points_have_no_silhouette() {
        let pts = vec![vec![1.0, 1.0]; 5];
        assert!(silhouette(&pts, &[0, 0, 1, 1, 1]).is_err());
    }

    #[test]
    fn two_blobs() {
        let mut pts = Vec::new();
        for i in 0..10 {
            let e = i as f64 * 0.01;
            pts.push(vec![e, -e]);
            pts.push(vec![10.0 + e, 10.0 - e]);
        }
        let c = kmeans_cluster(&pts, &[2, 3, 4, 5], 5, 1).unwrap();
        assert_eq!(c.fit.k, 2);
        assert!(c.silhouette > 0.7);
    }
}
