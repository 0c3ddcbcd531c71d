//! Aggregation rules that turn a datasets-by-methods metric matrix into a
//! leaderboard.
//!
//! Every leaderboard orders methods by score in the rule's direction and
//! breaks exact score ties by ascending method label.

mod dm;
mod social;

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

pub use dm::{dm_auc, dm_lbo, dm_profile, PerformanceProfile, DEFAULT_BETA_HAT};
pub use social::{copeland, minimax, pairwise_wins, MinimaxVariant};

use crate::matrix::MetricMatrix;
use crate::seed::derived_rng;
use crate::stats::average_ranks;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    HigherBetter,
    LowerBetter,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LeaderboardEntry {
    pub method: String,
    pub score: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Leaderboard {
    pub rule: String,
    pub direction: Direction,
    /// Best first.
    pub entries: Vec<LeaderboardEntry>,
}

impl Leaderboard {
    pub fn new(rule: impl Into<String>, direction: Direction, methods: &[String], scores: &[f64]) -> Self {
        assert_eq!(methods.len(), scores.len());
        let mut entries: Vec<LeaderboardEntry> = methods
            .iter()
            .zip(scores)
            .map(|(m, &s)| LeaderboardEntry {
                method: m.clone(),
                // Folds -0.0 into 0.0.
                score: s + 0.0,
            })
            .collect();
        entries.sort_by(|a, b| {
            let by_score = match direction {
                Direction::HigherBetter => b.score.partial_cmp(&a.score),
                Direction::LowerBetter => a.score.partial_cmp(&b.score),
            }
            .unwrap_or(Ordering::Equal);
            by_score.then_with(|| a.method.cmp(&b.method))
        });
        Leaderboard {
            rule: rule.into(),
            direction,
            entries,
        }
    }

    pub fn order(&self) -> Vec<&str> {
        self.entries.iter().map(|e| e.method.as_str()).collect()
    }

    pub fn winner(&self) -> &str {
        &self.entries[0].method
    }

    pub fn score(&self, method: &str) -> Option<f64> {
        self.entries.iter().find(|e| e.method == method).map(|e| e.score)
    }

    /// Rank of each of `methods` (1 = best), tied scores sharing their
    /// average rank. Only the listed methods are ranked.
    pub fn ranks_of(&self, methods: &[String]) -> Result<Vec<f64>> {
        let scores: Vec<f64> = methods
            .iter()
            .map(|m| {
                self.score(m)
                    .ok_or_else(|| Error::invalid(format!("method {m:?} not on leaderboard {}", self.rule)))
            })
            .collect::<Result<_>>()?;
        let keyed: Vec<f64> = match self.direction {
            Direction::HigherBetter => scores.iter().map(|s| -s).collect(),
            Direction::LowerBetter => scores,
        };
        Ok(average_ranks(&keyed))
    }

    /// `position,method,score` text.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("position,method,score\n");
        for (n, e) in self.entries.iter().enumerate() {
            out.push_str(&format!("{},{},{}\n", n + 1, e.method, crate::io::fmt_f64(e.score)));
        }
        out
    }

    pub fn from_csv(rule: &str, direction: Direction, text: &str) -> Result<Self> {
        let mut methods = Vec::new();
        let mut scores = Vec::new();
        for (n, line) in text.lines().enumerate().skip(1) {
            if line.trim().is_empty() {
                continue;
            }
            let parts: Vec<&str> = line.splitn(3, ',').collect();
            let bad = |m: &str| Error::Parse {
                line: n + 1,
                message: m.into(),
            };
            if parts.len() != 3 {
                return Err(bad("expected position,method,score"));
            }
            methods.push(parts[1].to_string());
            scores.push(parts[2].parse::<f64>().map_err(|_| bad("bad score"))?);
        }
        Ok(Leaderboard::new(rule, direction, &methods, &scores))
    }
}

/// The eight aggregation rules.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rule {
    MeanRanks,
    Arithmetic,
    Geometric,
    Harmonic,
    DmAuc,
    DmLbo,
    Copeland,
    Minimax,
}

impl Rule {
    pub const ALL: [Rule; 8] = [
        Rule::MeanRanks,
        Rule::Arithmetic,
        Rule::Geometric,
        Rule::Harmonic,
        Rule::DmAuc,
        Rule::DmLbo,
        Rule::Copeland,
        Rule::Minimax,
    ];

    /// Identifier used for file names and JSON keys.
    pub fn name(self) -> &'static str {
        match self {
            Rule::MeanRanks => "mean_ranks",
            Rule::Arithmetic => "mean",
            Rule::Geometric => "geometric",
            Rule::Harmonic => "harmonic",
            Rule::DmAuc => "dm_auc",
            Rule::DmLbo => "dm_lbo",
            Rule::Copeland => "copeland",
            Rule::Minimax => "minimax",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Rule::MeanRanks => "Mean ranks",
            Rule::Arithmetic => "MA",
            Rule::Geometric => "Geom",
            Rule::Harmonic => "Harm",
            Rule::DmAuc => "DM AUC",
            Rule::DmLbo => "DM LBO",
            Rule::Copeland => "Copeland",
            Rule::Minimax => "Minimax",
        }
    }

    pub fn direction(self) -> Direction {
        match self {
            Rule::MeanRanks | Rule::DmLbo => Direction::LowerBetter,
            _ => Direction::HigherBetter,
        }
    }

    /// Parses a rule name or `all`.
    pub fn parse_list(s: &str) -> Result<Vec<Rule>> {
        if s.eq_ignore_ascii_case("all") {
            return Ok(Rule::ALL.to_vec());
        }
        s.split(',').map(|p| p.trim().parse()).collect()
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Rule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.to_ascii_lowercase().replace(['-', ' '], "_");
        let alias = match key.as_str() {
            "mr" => "mean_ranks",
            "ma" | "arithmetic" => "mean",
            "geom" => "geometric",
            "harm" => "harmonic",
            "auc" => "dm_auc",
            "lbo" => "dm_lbo",
            other => other,
        };
        Rule::ALL
            .into_iter()
            .find(|r| r.name() == alias)
            .ok_or_else(|| Error::invalid(format!("unknown aggregation rule {s:?}")))
    }
}

/// Parameters shared by the rules.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AggregationOptions {
    pub beta_hat: f64,
    pub minimax: MinimaxVariant,
}

impl Default for AggregationOptions {
    fn default() -> Self {
        AggregationOptions {
            beta_hat: DEFAULT_BETA_HAT,
            minimax: MinimaxVariant::WinningVotes,
        }
    }
}

/// Applies one rule to `q`.
pub fn aggregate(q: &MetricMatrix, rule: Rule, opts: &AggregationOptions) -> Result<Leaderboard> {
    match rule {
        Rule::MeanRanks => Ok(mean_ranks(&rank_rows(q))),
        Rule::Arithmetic => Ok(mean_aggregate(q, MeanKind::Arithmetic)),
        Rule::Geometric => Ok(mean_aggregate(q, MeanKind::Geometric)),
        Rule::Harmonic => Ok(mean_aggregate(q, MeanKind::Harmonic)),
        Rule::DmAuc => dm_auc(&dm_profile(q, opts.beta_hat)?),
        Rule::DmLbo => dm_lbo(q, opts.beta_hat),
        Rule::Copeland => Ok(copeland(q)),
        Rule::Minimax => minimax(q, opts.minimax),
    }
}

/// Applies several rules, keyed by rule name.
pub fn aggregate_all(q: &MetricMatrix, rules: &[Rule], opts: &AggregationOptions) -> Result<BTreeMap<String, Leaderboard>> {
    rules
        .iter()
        .map(|&r| Ok((r.name().to_string(), aggregate(q, r, opts)?)))
        .collect()
}

/// Per-dataset ranks of the methods, 1 = highest metric, ties averaged.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankMatrix {
    pub datasets: Vec<String>,
    pub methods: Vec<String>,
    pub ranks: Vec<Vec<f64>>,
    pub ties: String,
}

pub fn rank_rows(q: &MetricMatrix) -> RankMatrix {
    let ranks = q
        .rows()
        .map(|row| average_ranks(&row.iter().map(|v| -v).collect::<Vec<_>>()))
        .collect();
    RankMatrix {
        datasets: q.datasets().to_vec(),
        methods: q.methods().to_vec(),
        ranks,
        ties: "average".into(),
    }
}

/// Average rank per method; lower is better.
pub fn mean_ranks(r: &RankMatrix) -> Leaderboard {
    let d = r.ranks.len() as f64;
    let scores: Vec<f64> = (0..r.methods.len())
        .map(|i| r.ranks.iter().map(|row| row[i]).sum::<f64>() / d)
        .collect();
    Leaderboard::new(Rule::MeanRanks.name(), Direction::LowerBetter, &r.methods, &scores)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeanKind {
    Arithmetic,
    Geometric,
    Harmonic,
}

/// Column means of the given kind; higher is better. Geometric and harmonic
/// means of a column with a non-positive entry are 0.
pub fn mean_aggregate(q: &MetricMatrix, kind: MeanKind) -> Leaderboard {
    let d = q.n_datasets() as f64;
    let scores: Vec<f64> = (0..q.n_methods())
        .map(|i| {
            let col = q.column(i);
            match kind {
                MeanKind::Arithmetic => col.iter().sum::<f64>() / d,
                _ if col.iter().any(|&v| v <= 0.0) => {
                    log::warn!("method {} has non-positive entries; {kind:?} mean set to 0", q.methods()[i]);
                    0.0
                }
                MeanKind::Geometric => (col.iter().map(|v| v.ln()).sum::<f64>() / d).exp(),
                MeanKind::Harmonic => d / col.iter().map(|v| 1.0 / v).sum::<f64>(),
            }
        })
        .collect();
    let rule = match kind {
        MeanKind::Arithmetic => Rule::Arithmetic,
        MeanKind::Geometric => Rule::Geometric,
        MeanKind::Harmonic => Rule::Harmonic,
    };
    Leaderboard::new(rule.name(), Direction::HigherBetter, q.methods(), &scores)
}

/// Row-wise min-max scaling; constant rows map to zeros.
pub fn minmax_normalize(q: &MetricMatrix) -> Result<MetricMatrix> {
    let bounds: Vec<(f64, f64)> = q
        .rows()
        .map(|row| {
            let lo = row.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            (lo, hi)
        })
        .collect();
    for (t, &(lo, hi)) in bounds.iter().enumerate() {
        if hi <= lo {
            log::warn!("dataset {} is constant across methods; normalized to zeros", q.datasets()[t]);
        }
    }
    q.map(|t, _, v| {
        let (lo, hi) = bounds[t];
        if hi > lo {
            (v - lo) / (hi - lo)
        } else {
            0.0
        }
    })
}

/// Expected number of first places per method when each dataset's metric is
/// modelled as independent Gaussians `N(μ, σ)`; higher is better.
///
/// Rows with all σ = 0 are counted exactly (tied maxima share the win).
pub fn expected_tops(means: &MetricMatrix, stds: &MetricMatrix, mc_samples: usize, seed: u64) -> Result<Leaderboard> {
    if means.datasets() != stds.datasets() || means.methods() != stds.methods() {
        return Err(Error::invalid("mean and std matrices must share labels"));
    }
    if mc_samples == 0 {
        return Err(Error::invalid("need at least one Monte Carlo sample"));
    }
    if stds.rows().flatten().any(|&s| s < 0.0) {
        return Err(Error::invalid("standard deviations must be non-negative"));
    }
    let m = means.n_methods();
    let mut w = vec![0.0; m];
    let mut draw = vec![0.0; m];
    for t in 0..means.n_datasets() {
        let mu = means.row(t);
        let sd = stds.row(t);
        let share = |values: &[f64], weight: f64, w: &mut [f64]| {
            let best = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let winners: Vec<usize> = (0..m).filter(|&j| values[j] == best).collect();
            for &j in &winners {
                w[j] += weight / winners.len() as f64;
            }
        };
        if sd.iter().all(|&s| s == 0.0) {
            share(mu, 1.0, &mut w);
            continue;
        }
        let dists: Vec<Option<Normal<f64>>> = (0..m)
            .map(|j| (sd[j] > 0.0).then(|| Normal::new(mu[j], sd[j]).expect("σ > 0 and finite")))
            .collect();
        let mut rng = derived_rng(seed, "expected-tops", &[t as u64]);
        let weight = 1.0 / mc_samples as f64;
        for _ in 0..mc_samples {
            for j in 0..m {
                draw[j] = dists[j].as_ref().map_or(mu[j], |d| d.sample(&mut rng));
            }
            share(&draw, weight, &mut w);
        }
    }
    Ok(Leaderboard::new("expected_tops", Direction::HigherBetter, means.methods(), &w))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(rows: Vec<Vec<f64>>) -> MetricMatrix {
        MetricMatrix::from_rows(rows).unwrap()
    }

    #[test]
    fn rank_rows_examples() {
        let r = rank_rows(&q(vec![vec![0.3, 0.1, 0.2], vec![0.2, 0.2, 0.1]]));
        assert_eq!(r.ranks[0], vec![1.0, 3.0, 2.0]);
        assert_eq!(r.ranks[1], vec![1.5, 1.5, 3.0]);
    }

    #[test]
    fn mean_ranks_arithmetic() {
        let r = RankMatrix {
            datasets: vec!["a".into(), "b".into(), "c".into()],
            methods: vec!["x".into(), "y".into(), "z".into()],
            ranks: vec![vec![1.0, 2.0, 3.0], vec![1.0, 3.0, 2.0], vec![2.0, 1.0, 3.0]],
            ties: "average".into(),
        };
        let b = mean_ranks(&r);
        assert_eq!(b.order(), vec!["x", "y", "z"]);
        assert!((b.score("x").unwrap() - 4.0 / 3.0).abs() < 1e-12);
        assert_eq!(b.score("y"), Some(2.0));
        assert!((b.score("z").unwrap() - 8.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn three_means() {
        let m = q(vec![vec![0.1, 0.5], vec![0.4, 0.5]]);
        let a = mean_aggregate(&m, MeanKind::Arithmetic);
        let g = mean_aggregate(&m, MeanKind::Geometric);
        let h = mean_aggregate(&m, MeanKind::Harmonic);
        assert!((a.score("m0").unwrap() - 0.25).abs() < 1e-12);
        assert!((g.score("m0").unwrap() - 0.2).abs() < 1e-12);
        assert!((h.score("m0").unwrap() - 0.16).abs() < 1e-12);
        assert!((g.score("m1").unwrap() - 0.5).abs() < 1e-12);
        let z = q(vec![vec![0.0, 0.5], vec![0.4, 0.5]]);
        assert_eq!(mean_aggregate(&z, MeanKind::Harmonic).score("m0"), Some(0.0));
    }

    #[test]
    fn minmax_examples() {
        let m = q(vec![vec![0.1, 0.3], vec![0.5, 0.5]]);
        let n = minmax_normalize(&m).unwrap();
        assert_eq!(n.row(0), [0.0, 1.0]);
        assert_eq!(n.row(1), [0.0, 0.0]);
        assert_eq!(minmax_normalize(&n).unwrap(), n);
    }

    #[test]
    fn deterministic_tops() {
        let mu = q(vec![vec![0.1, 0.3], vec![0.5, 0.2], vec![0.4, 0.4]]);
        let sd = mu.map(|_, _, _| 0.0).unwrap();
        let b = expected_tops(&mu, &sd, 10, 0).unwrap();
        assert_eq!(b.score("m0"), Some(1.5));
        assert_eq!(b.score("m1"), Some(1.5));
    }

    #[test]
    fn leaderboard_csv_round_trip_and_tiebreak() {
        let methods: Vec<String> = ["b", "a", "c"].iter().map(|s| s.to_string()).collect();
        let b = Leaderboard::new("r", Direction::HigherBetter, &methods, &[1.0, 1.0, 2.0]);
        assert_eq!(b.order(), vec!["c", "a", "b"]);
        let back = Leaderboard::from_csv("r", Direction::HigherBetter, &b.to_csv()).unwrap();
        assert_eq!(back, b);
        assert_eq!(b.ranks_of(&methods).unwrap(), vec![2.5, 2.5, 1.0]);
    }

    #[test]
    fn rule_names_parse() {
        for r in Rule::ALL {
            assert_eq!(r.name().parse::<Rule>().unwrap(), r);
        }
        assert_eq!(Rule::parse_list("all").unwrap().len(), 8);
    }
}
