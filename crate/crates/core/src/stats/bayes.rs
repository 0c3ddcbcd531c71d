use rand::Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use crate::seed::rng;
use crate::{Error, Result};

/// Posterior probabilities that the difference lies left of, inside or
/// right of the region of practical equivalence.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BayesTriplet {
    pub left: f64,
    pub rope: f64,
    pub right: f64,
}

impl BayesTriplet {
    /// The same posterior for the negated differences.
    pub fn mirrored(self) -> Self {
        BayesTriplet {
            left: self.right,
            rope: self.rope,
            right: self.left,
        }
    }

    pub fn max_directional(self) -> f64 {
        self.left.max(self.right)
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Side {
    Left,
    Rope,
    Right,
}

/// Bayesian signed-rank test with a single pseudo-observation at 0.
///
/// Each Monte Carlo draw takes Dirichlet(1, …, 1) weights over the
/// augmented sample, accumulates the weight products of all pairs `i ≤ j`
/// by the side of `(z_i + z_j) / 2`, and votes for the heaviest side.
pub fn bayesian_signed_rank(diffs: &[f64], rope: f64, mc_samples: usize, seed: u64) -> Result<BayesTriplet> {
    if diffs.is_empty() {
        return Err(Error::invalid("need at least one difference"));
    }
    if diffs.iter().any(|d| !d.is_finite()) {
        return Err(Error::invalid("differences must be finite"));
    }
    if rope.is_nan() || rope < 0.0 {
        return Err(Error::invalid(format!("rope must be non-negative, got {rope}")));
    }
    if mc_samples == 0 {
        return Err(Error::invalid("need at least one Monte Carlo sample"));
    }
    if mc_samples < 100 {
        log::warn!("{mc_samples} Monte Carlo samples give a noisy posterior");
    }
    let mut z = Vec::with_capacity(diffs.len() + 1);
    z.push(0.0);
    z.extend_from_slice(diffs);
    let n = z.len();
    let mut side = vec![Side::Rope; n * n];
    for i in 0..n {
        for j in i..n {
            let mid = (z[i] + z[j]) / 2.0;
            side[i * n + j] = if mid < -rope {
                Side::Left
            } else if mid > rope {
                Side::Right
            } else {
                Side::Rope
            };
        }
    }

    let mut rng = rng(seed);
    let mut w = vec![0.0; n];
    let (mut nl, mut ne, mut nr) = (0usize, 0usize, 0usize);
    for _ in 0..mc_samples {
        let mut total = 0.0;
        for x in w.iter_mut() {
            *x = rng.sample::<f64, _>(Exp1);
            total += *x;
        }
        for x in w.iter_mut() {
            *x /= total;
        }
        let (mut tl, mut te, mut tr) = (0.0, 0.0, 0.0);
        for i in 0..n {
            let row = &side[i * n..(i + 1) * n];
            let (mut al, mut ae, mut ar) = (0.0, 0.0, 0.0);
            for j in i..n {
                match row[j] {
                    Side::Left => al += w[j],
                    Side::Rope => ae += w[j],
                    Side::Right => ar += w[j],
                }
            }
            tl += w[i] * al;
            te += w[i] * ae;
            tr += w[i] * ar;
        }
        if tr > tl && tr > te {
            nr += 1;
        } else if tl > tr && tl > te {
            nl += 1;
        } else {
            ne += 1;
        }
    }
    let s = mc_samples as f64;
    Ok(BayesTriplet {
        left: nl as f64 / s,
        rope: ne as f64 / s,
        right: nr as f64 / s,
    })
}
