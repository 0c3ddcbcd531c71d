use serde::{Deserialize, Serialize};

use super::{Direction, Leaderboard, Rule};
use crate::matrix::MetricMatrix;
use crate::{Error, Result};

pub const DEFAULT_BETA_HAT: f64 = 3.0;

/// Exact Dolan–Moré performance profiles on `[1, β̂]`.
///
/// For method i and dataset t the ratio is `max_j q_tj / q_ti`, infinite
/// when `q_ti = 0` below a positive maximum and 1 on an all-zero row. The
/// profile `p_i(β)` is the share of datasets whose ratio is at most β.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerformanceProfile {
    pub beta_hat: f64,
    pub methods: Vec<String>,
    pub n_datasets: usize,
    /// Per-method ratios sorted ascending (may contain infinity).
    pub ratios: Vec<Vec<f64>>,
    /// Per-method `(β, p(β))` steps: p jumps to the given value at β.
    pub breakpoints: Vec<Vec<(f64, f64)>>,
    pub raw_areas: Vec<f64>,
    pub normalized_areas: Vec<f64>,
}

impl PerformanceProfile {
    /// `p_i(β)`.
    pub fn value(&self, method: usize, beta: f64) -> f64 {
        let r = &self.ratios[method];
        r.partition_point(|&x| x <= beta) as f64 / self.n_datasets as f64
    }
}

fn ratio(q: f64, best: f64) -> f64 {
    if best == 0.0 {
        1.0
    } else if q == 0.0 {
        f64::INFINITY
    } else {
        best / q
    }
}

pub fn dm_profile(q: &MetricMatrix, beta_hat: f64) -> Result<PerformanceProfile> {
    if !beta_hat.is_finite() || beta_hat < 1.0 {
        return Err(Error::invalid(format!("β̂ must be a finite value ≥ 1, got {beta_hat}")));
    }
    if q.rows().flatten().any(|&v| v < 0.0) {
        return Err(Error::invalid("performance profiles need non-negative metric values"));
    }
    let d = q.n_datasets();
    let m = q.n_methods();
    let mut ratios = vec![Vec::with_capacity(d); m];
    for row in q.rows() {
        let best = row.iter().copied().fold(0.0, f64::max);
        for (i, &v) in row.iter().enumerate() {
            ratios[i].push(ratio(v, best));
        }
    }
    let mut breakpoints = Vec::with_capacity(m);
    let mut raw_areas = Vec::with_capacity(m);
    for r in &mut ratios {
        r.sort_by(f64::total_cmp);
        let mut steps: Vec<(f64, f64)> = Vec::new();
        let mut area = 0.0;
        for (n, &x) in r.iter().enumerate() {
            if x > beta_hat {
                break;
            }
            area += beta_hat - x;
            let p = (n + 1) as f64 / d as f64;
            match steps.last_mut() {
                Some(last) if last.0 == x => last.1 = p,
                _ => steps.push((x, p)),
            }
        }
        breakpoints.push(steps);
        raw_areas.push(area / d as f64);
    }
    let total: f64 = raw_areas.iter().sum();
    let normalized_areas = if total > 0.0 {
        raw_areas.iter().map(|a| a / total).collect()
    } else {
        vec![0.0; m]
    };
    Ok(PerformanceProfile {
        beta_hat,
        methods: q.methods().to_vec(),
        n_datasets: d,
        ratios,
        breakpoints,
        raw_areas,
        normalized_areas,
    })
}

/// Normalized area under each profile; higher is better.
pub fn dm_auc(profile: &PerformanceProfile) -> Result<Leaderboard> {
    if profile.raw_areas.iter().all(|&a| a == 0.0) {
        return Err(Error::degenerate(format!(
            "every performance profile has zero area on [1, {}]",
            profile.beta_hat
        )));
    }
    Ok(Leaderboard::new(
        Rule::DmAuc.name(),
        Direction::HigherBetter,
        &profile.methods,
        &profile.normalized_areas,
    ))
}

/// Leave-best-out: repeatedly removes the DM-AUC winner among the remaining
/// methods. Scores are removal ranks (1 = first removed); lower is better.
pub fn dm_lbo(q: &MetricMatrix, beta_hat: f64) -> Result<Leaderboard> {
    let m = q.n_methods();
    if m < 2 {
        return Err(Error::invalid("leave-best-out needs at least two methods"));
    }
    let mut remaining: Vec<usize> = (0..m).collect();
    let mut rank = vec![0.0; m];
    let mut next = 1.0;
    while !remaining.is_empty() {
        let winner = if remaining.len() == 1 {
            0
        } else {
            let sub = q.select_columns(&remaining);
            let areas = dm_profile(&sub, beta_hat)?.normalized_areas;
            if areas.iter().all(|&a| a == 0.0) {
                return Err(Error::degenerate(format!(
                    "every performance profile has zero area on [1, {beta_hat}]"
                )));
            }
            let mut best = 0;
            for n in 1..remaining.len() {
                let better = areas[n] > areas[best]
                    || (areas[n] == areas[best] && q.methods()[remaining[n]] < q.methods()[remaining[best]]);
                if better {
                    best = n;
                }
            }
            best
        };
        rank[remaining[winner]] = next;
        next += 1.0;
        remaining.remove(winner);
    }
    Ok(Leaderboard::new(Rule::DmLbo.name(), Direction::LowerBetter, q.methods(), &rank))
}
