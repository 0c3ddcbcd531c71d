use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{optimal_design_select, random_select, select_principal_kmeans, DesignCriterion, FeatureTable, KMeansPipelineOptions};
use crate::aggregation::{aggregate, AggregationOptions, Leaderboard, Rule};
use crate::matrix::MetricMatrix;
use crate::seed::derive_seed;
use crate::stability::leaderboard_spearman;
use crate::{Error, Result};

/// Spearman between the rule's leaderboard on the selected rows and on all rows.
pub fn selection_fidelity(q: &MetricMatrix, selected: &[usize], rule: Rule, opts: &AggregationOptions) -> Result<f64> {
    if selected.is_empty() || selected.iter().any(|&r| r >= q.n_datasets()) {
        return Err(Error::invalid("selected rows must be a non-empty subset of the matrix rows"));
    }
    let full = aggregate(q, rule, opts)?;
    let sub = aggregate(&q.select_rows(selected), rule, opts)?;
    leaderboard_spearman(&full, &sub, q.methods())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SelectorKind {
    Random,
    DOptimal,
    AOptimal,
    KMeans,
}

impl SelectorKind {
    pub const ALL: [SelectorKind; 4] = [
        SelectorKind::Random,
        SelectorKind::DOptimal,
        SelectorKind::AOptimal,
        SelectorKind::KMeans,
    ];

    pub fn label(self) -> &'static str {
        match self {
            SelectorKind::Random => "Random",
            SelectorKind::DOptimal => "D optimal",
            SelectorKind::AOptimal => "A optimal",
            SelectorKind::KMeans => "KMeans",
        }
    }

    pub fn select(self, f: &FeatureTable, target_count: usize, seed: u64, opts: &FidelityOptions) -> Result<Vec<usize>> {
        Ok(match self {
            SelectorKind::Random => random_select(&f.rows, target_count, seed)?,
            SelectorKind::DOptimal => optimal_design_select(
                f,
                target_count,
                DesignCriterion::D,
                opts.design_restarts,
                seed,
                opts.kmeans.variance_target,
            )?,
            SelectorKind::AOptimal => optimal_design_select(
                f,
                target_count,
                DesignCriterion::A,
                opts.design_restarts,
                seed,
                opts.kmeans.variance_target,
            )?,
            SelectorKind::KMeans => select_principal_kmeans(f, target_count, seed, &opts.kmeans)?,
        }
        .indices)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FidelityOptions {
    pub target_count: usize,
    pub simulations: usize,
    pub batch_size: usize,
    pub rule: Rule,
    pub aggregation: AggregationOptions,
    pub kmeans: KMeansPipelineOptions,
    pub design_restarts: usize,
}

impl Default for FidelityOptions {
    fn default() -> Self {
        FidelityOptions {
            target_count: 6,
            simulations: 500,
            batch_size: 10,
            rule: Rule::DmAuc,
            aggregation: AggregationOptions::default(),
            kmeans: KMeansPipelineOptions::default(),
            design_restarts: super::DEFAULT_DESIGN_RESTARTS,
        }
    }
}

/// Mean selection fidelity per selector and metric over seeded simulations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FidelityTable {
    pub metrics: Vec<String>,
    pub selectors: Vec<String>,
    /// `[selector][metric]` mean Spearman.
    pub means: Vec<Vec<f64>>,
    /// `[selector][simulation]` Spearman averaged over metrics.
    pub per_simulation: Vec<Vec<f64>>,
    pub batch_size: usize,
    /// Share of simulation batches where KMeans has the strictly highest mean.
    pub kmeans_best_share: f64,
}

impl FidelityTable {
    /// `Method,<metric>,...` with three decimals.
    pub fn to_csv(&self) -> String {
        let mut out = format!("Method,{}\n", self.metrics.join(","));
        for (s, name) in self.selectors.iter().enumerate() {
            out.push_str(name);
            for v in &self.means[s] {
                out.push_str(&format!(",{v:.3}"));
            }
            out.push('\n');
        }
        out
    }

    pub fn mean_of(&self, selector: SelectorKind) -> Option<f64> {
        let s = self.selectors.iter().position(|l| l == selector.label())?;
        let row = &self.means[s];
        Some(row.iter().sum::<f64>() / row.len() as f64)
    }
}

/// Runs every selector `simulations` times and scores each selection on
/// each metric matrix. `metrics` pairs a column label with its matrix.
pub fn fidelity_table(
    features: &FeatureTable,
    metrics: &[(String, MetricMatrix)],
    opts: &FidelityOptions,
    seed: u64,
) -> Result<FidelityTable> {
    if metrics.is_empty() {
        return Err(Error::invalid("need at least one metric matrix"));
    }
    if opts.simulations == 0 || opts.batch_size == 0 {
        return Err(Error::invalid("simulations and batch size must be positive"));
    }
    for (label, q) in metrics {
        if q.datasets() != features.rows.as_slice() {
            return Err(Error::invalid(format!("matrix {label} rows do not match the feature table")));
        }
    }
    let references: Vec<Leaderboard> = metrics
        .iter()
        .map(|(_, q)| aggregate(q, opts.rule, &opts.aggregation))
        .collect::<Result<_>>()?;
    // [simulation][selector][metric]
    let sims: Vec<Vec<Vec<f64>>> = (0..opts.simulations)
        .into_par_iter()
        .map(|s| {
            let sim_seed = derive_seed(seed, "fidelity", &[s as u64]);
            SelectorKind::ALL
                .iter()
                .map(|&kind| {
                    let rows = kind.select(features, opts.target_count, sim_seed, opts)?;
                    metrics
                        .iter()
                        .zip(&references)
                        .map(|((_, q), full)| {
                            let sub = aggregate(&q.select_rows(&rows), opts.rule, &opts.aggregation)?;
                            leaderboard_spearman(full, &sub, q.methods())
                        })
                        .collect::<Result<Vec<f64>>>()
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let n_sel = SelectorKind::ALL.len();
    let n_met = metrics.len();
    let sims_f = opts.simulations as f64;
    let means: Vec<Vec<f64>> = (0..n_sel)
        .map(|k| (0..n_met).map(|j| sims.iter().map(|s| s[k][j]).sum::<f64>() / sims_f).collect())
        .collect();
    let per_simulation: Vec<Vec<f64>> = (0..n_sel)
        .map(|k| sims.iter().map(|s| s[k].iter().sum::<f64>() / n_met as f64).collect())
        .collect();
    let km = SelectorKind::ALL.iter().position(|&k| k == SelectorKind::KMeans).expect("listed");
    let mut batches = 0;
    let mut wins = 0;
    for start in (0..opts.simulations).step_by(opts.batch_size) {
        let end = (start + opts.batch_size).min(opts.simulations);
        let avg: Vec<f64> = per_simulation
            .iter()
            .map(|v| v[start..end].iter().sum::<f64>() / (end - start) as f64)
            .collect();
        batches += 1;
        if (0..n_sel).all(|k| k == km || avg[km] > avg[k]) {
            wins += 1;
        }
    }
    Ok(FidelityTable {
        metrics: metrics.iter().map(|(l, _)| l.clone()).collect(),
        selectors: SelectorKind::ALL.iter().map(|k| k.label().to_string()).collect(),
        means,
        per_simulation,
        batch_size: opts.batch_size,
        kmeans_best_share: wins as f64 / batches as f64,
    })
}
