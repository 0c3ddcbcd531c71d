//! Ranking stress tests: perturb the metric matrix and measure how far each
//! aggregation rule's leaderboard drifts, as Spearman correlation against
//! a reference leaderboard.
//!
//! Every trial draws from its own stream seeded by
//! `(master seed, perturbation kind, grid point, trial)`, so reports do not
//! depend on scheduling.

mod search;

use rand::seq::index::sample;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use search::{search_counterexample, Counterexample, PerturbationKind, RandomMatrixSpec};

use crate::aggregation::{aggregate, AggregationOptions, Leaderboard, Rule};
use crate::matrix::MetricMatrix;
use crate::seed::derived_rng;
use crate::stats::spearman;
use crate::{Error, Result};

pub const DEFAULT_TRIALS: usize = 100;
pub const CLONE_ALPHA_TOLERANCE: f64 = 0.15;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityPoint {
    pub parameter: f64,
    pub mean: f64,
    pub std: f64,
    pub trials: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub kind: String,
    pub rule: String,
    pub points: Vec<StabilityPoint>,
}

fn point(parameter: f64, values: &[f64]) -> StabilityPoint {
    let n = values.len().max(1) as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    StabilityPoint {
        parameter,
        mean,
        std: var.sqrt(),
        trials: values.len(),
    }
}

/// Spearman correlation of two leaderboards restricted to `methods`. Identical
/// rank vectors (including all-tied ones) give 1.
pub fn leaderboard_spearman(a: &Leaderboard, b: &Leaderboard, methods: &[String]) -> Result<f64> {
    if methods.len() < 2 {
        return Ok(1.0);
    }
    let (ra, rb) = (a.ranks_of(methods)?, b.ranks_of(methods)?);
    if ra == rb {
        return Ok(1.0);
    }
    spearman(&ra, &rb)
}

fn sorted_subset(rng: &mut crate::seed::Rng, n: usize, k: usize) -> Vec<usize> {
    let mut idx = sample(rng, n, k).into_vec();
    idx.sort_unstable();
    idx
}

/// For each drop count, `trials` random row subsets of size `d − drop` are
/// ranked and compared with the full-matrix leaderboard.
pub fn drop_datasets_curve(
    q: &MetricMatrix,
    rule: Rule,
    opts: &AggregationOptions,
    drops: &[usize],
    trials: usize,
    seed: u64,
) -> Result<StabilityReport> {
    let d = q.n_datasets();
    if drops.iter().any(|&k| k >= d) {
        return Err(Error::invalid(format!("can drop at most {} of {d} datasets", d - 1)));
    }
    if trials == 0 {
        return Err(Error::invalid("need at least one trial"));
    }
    let reference = aggregate(q, rule, opts)?;
    let methods = q.methods().to_vec();
    let points = drops
        .iter()
        .map(|&drop| {
            let values: Vec<f64> = (0..trials)
                .into_par_iter()
                .map(|trial| {
                    let mut rng = derived_rng(seed, "drop-datasets", &[drop as u64, trial as u64]);
                    let rows = sorted_subset(&mut rng, d, d - drop);
                    let board = aggregate(&q.select_rows(&rows), rule, opts)?;
                    leaderboard_spearman(&reference, &board, &methods)
                })
                .collect::<Result<_>>()?;
            Ok(point(drop as f64, &values))
        })
        .collect::<Result<_>>()?;
    Ok(StabilityReport {
        kind: "drop_datasets".into(),
        rule: rule.name().into(),
        points,
    })
}

/// Spearman between the leaderboards of two independent random row subsets
/// of size `subset_size`, averaged over `pairs` draws.
pub fn subset_pair_consistency(
    q: &MetricMatrix,
    rule: Rule,
    opts: &AggregationOptions,
    subset_size: usize,
    pairs: usize,
    seed: u64,
) -> Result<StabilityReport> {
    let d = q.n_datasets();
    if subset_size == 0 || subset_size > d {
        return Err(Error::invalid(format!("subset size must lie in 1..={d}")));
    }
    if pairs == 0 {
        return Err(Error::invalid("need at least one pair"));
    }
    let methods = q.methods().to_vec();
    let values: Vec<f64> = (0..pairs)
        .into_par_iter()
        .map(|p| {
            let mut rng = derived_rng(seed, "subset-pairs", &[subset_size as u64, p as u64]);
            let a = sorted_subset(&mut rng, d, subset_size);
            let b = sorted_subset(&mut rng, d, subset_size);
            let ba = aggregate(&q.select_rows(&a), rule, opts)?;
            let bb = aggregate(&q.select_rows(&b), rule, opts)?;
            leaderboard_spearman(&ba, &bb, &methods)
        })
        .collect::<Result<_>>()?;
    Ok(StabilityReport {
        kind: "subset_pairs".into(),
        rule: rule.name().into(),
        points: vec![point(subset_size as f64, &values)],
    })
}

/// As [`drop_datasets_curve`] but removing methods; the surviving methods'
/// leaderboard is compared with their relative order in the reference.
pub fn drop_methods_curve(
    q: &MetricMatrix,
    rule: Rule,
    opts: &AggregationOptions,
    drops: &[usize],
    trials: usize,
    seed: u64,
) -> Result<StabilityReport> {
    let m = q.n_methods();
    if drops.iter().any(|&k| k + 2 > m) {
        return Err(Error::invalid(format!("can drop at most {} of {m} methods", m.saturating_sub(2))));
    }
    if trials == 0 {
        return Err(Error::invalid("need at least one trial"));
    }
    let reference = aggregate(q, rule, opts)?;
    let points = drops
        .iter()
        .map(|&drop| {
            let values: Vec<f64> = (0..trials)
                .into_par_iter()
                .map(|trial| {
                    let mut rng = derived_rng(seed, "drop-methods", &[drop as u64, trial as u64]);
                    let cols = sorted_subset(&mut rng, m, m - drop);
                    let sub = q.select_columns(&cols);
                    let board = aggregate(&sub, rule, opts)?;
                    leaderboard_spearman(&reference, &board, sub.methods())
                })
                .collect::<Result<_>>()?;
            Ok(point(drop as f64, &values))
        })
        .collect::<Result<_>>()?;
    Ok(StabilityReport {
        kind: "drop_methods".into(),
        rule: rule.name().into(),
        points,
    })
}

/// Leaderboard after injecting a method, and the Spearman correlation of
/// the original methods before and after.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Injection {
    pub added: String,
    pub leaderboard: Leaderboard,
    pub spearman: f64,
}

fn fresh_label(q: &MetricMatrix, base: &str) -> String {
    let mut label = base.to_string();
    let mut n = 1;
    while q.method_index(&label).is_some() {
        n += 1;
        label = format!("{base}_{n}");
    }
    label
}

fn inject(q: &MetricMatrix, rule: Rule, opts: &AggregationOptions, label: &str, column: &[f64]) -> Result<Injection> {
    let before = aggregate(q, rule, opts)?;
    let perturbed = q.with_column(label, column)?;
    let after = aggregate(&perturbed, rule, opts)?;
    let spearman = leaderboard_spearman(&before, &after, q.methods())?;
    Ok(Injection {
        added: label.to_string(),
        leaderboard: after,
        spearman,
    })
}

/// Appends `alpha ×` the `target` column.
pub fn add_similar_method(q: &MetricMatrix, rule: Rule, opts: &AggregationOptions, target: usize, alpha: f64) -> Result<Injection> {
    if target >= q.n_methods() {
        return Err(Error::invalid(format!("no method at index {target}")));
    }
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::invalid(format!("alpha must be positive, got {alpha}")));
    }
    if (1.0 - alpha).abs() > CLONE_ALPHA_TOLERANCE + 1e-12 {
        log::warn!("alpha {alpha} is outside the similar-method range |1 − α| ≤ {CLONE_ALPHA_TOLERANCE}");
    }
    let column: Vec<f64> = q.column(target).iter().map(|v| alpha * v).collect();
    let label = fresh_label(q, &format!("{}_clone", q.methods()[target]));
    inject(q, rule, opts, &label, &column)
}

/// Appends a column equal to `alpha ×` each dataset's best value.
pub fn add_best_method(q: &MetricMatrix, rule: Rule, opts: &AggregationOptions, alpha: f64) -> Result<Injection> {
    if !(1.0..=4.0).contains(&alpha) {
        return Err(Error::invalid(format!("alpha must lie in [1, 4], got {alpha}")));
    }
    let column: Vec<f64> = q
        .rows()
        .map(|row| alpha * row.iter().copied().fold(f64::NEG_INFINITY, f64::max))
        .collect();
    let label = fresh_label(q, "new_best");
    inject(q, rule, opts, &label, &column)
}

/// Similar-method injection over an α grid; each point averages over all
/// target methods.
pub fn add_similar_curve(q: &MetricMatrix, rule: Rule, opts: &AggregationOptions, alphas: &[f64]) -> Result<StabilityReport> {
    let points = alphas
        .iter()
        .map(|&alpha| {
            let values: Vec<f64> = (0..q.n_methods())
                .map(|t| add_similar_method(q, rule, opts, t, alpha).map(|i| i.spearman))
                .collect::<Result<_>>()?;
            Ok(point(alpha, &values))
        })
        .collect::<Result<_>>()?;
    Ok(StabilityReport {
        kind: "add_similar".into(),
        rule: rule.name().into(),
        points,
    })
}

/// New-best injection over an α grid.
pub fn add_best_curve(q: &MetricMatrix, rule: Rule, opts: &AggregationOptions, alphas: &[f64]) -> Result<StabilityReport> {
    let points = alphas
        .iter()
        .map(|&alpha| Ok(point(alpha, &[add_best_method(q, rule, opts, alpha)?.spearman])))
        .collect::<Result<_>>()?;
    Ok(StabilityReport {
        kind: "add_best".into(),
        rule: rule.name().into(),
        points,
    })
}

/// Spearman of the DM-AUC and DM-LBO leaderboards at each β̂ against the
/// leaderboards at `reference_beta`. Returns one report per rule.
pub fn beta_sensitivity(q: &MetricMatrix, beta_grid: &[f64], reference_beta: f64) -> Result<Vec<StabilityReport>> {
    if beta_grid.iter().any(|&b| b.is_nan() || b < 1.0) {
        return Err(Error::invalid("β̂ grid values must be at least 1"));
    }
    let methods = q.methods().to_vec();
    [Rule::DmAuc, Rule::DmLbo]
        .into_iter()
        .map(|rule| {
            let at = |beta_hat: f64| {
                aggregate(
                    q,
                    rule,
                    &AggregationOptions {
                        beta_hat,
                        ..Default::default()
                    },
                )
            };
            let reference = at(reference_beta)?;
            let points = beta_grid
                .iter()
                .map(|&b| Ok(point(b, &[leaderboard_spearman(&reference, &at(b)?, &methods)?])))
                .collect::<Result<_>>()?;
            Ok(StabilityReport {
                kind: "beta_sensitivity".into(),
                rule: rule.name().into(),
                points,
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParetoCheck {
    pub holds: bool,
    /// `(dominating, dominated)` pairs ranked the wrong way round.
    pub violations: Vec<(String, String)>,
}

/// Whether column a weakly dominates column b with at least one strict win.
pub fn dominates(q: &MetricMatrix, a: usize, b: usize) -> bool {
    let mut strict = false;
    for row in q.rows() {
        if row[a] < row[b] {
            return false;
        }
        strict |= row[a] > row[b];
    }
    strict
}

/// Checks a given leaderboard against the dominance relations of `q`.
pub fn pareto_violations(q: &MetricMatrix, board: &Leaderboard) -> Result<ParetoCheck> {
    let ranks = board.ranks_of(q.methods())?;
    let m = q.n_methods();
    let mut violations = Vec::new();
    for a in 0..m {
        for b in 0..m {
            if a != b && dominates(q, a, b) && ranks[a] > ranks[b] {
                violations.push((q.methods()[a].clone(), q.methods()[b].clone()));
            }
        }
    }
    Ok(ParetoCheck {
        holds: violations.is_empty(),
        violations,
    })
}

pub fn pareto_check(q: &MetricMatrix, rule: Rule, opts: &AggregationOptions) -> Result<ParetoCheck> {
    pareto_violations(q, &aggregate(q, rule, opts)?)
}

/// Parses `start:stop:step` (inclusive) or a comma-separated list.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let bad = || Error::invalid(format!("bad grid {spec:?}; use start:stop:step or a,b,c"));
    if spec.contains(':') {
        let parts: Vec<f64> = spec
            .split(':')
            .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
            .collect::<Result<_>>()?;
        let [start, stop, step] = parts[..] else {
            return Err(bad());
        };
        if step.is_nan() || step <= 0.0 || stop < start {
            return Err(bad());
        }
        let n = ((stop - start) / step + 1e-9).floor() as usize;
        Ok((0..=n).map(|k| start + k as f64 * step).collect())
    } else {
        spec.split(',').map(|p| p.trim().parse::<f64>().map_err(|_| bad())).collect()
    }
}
