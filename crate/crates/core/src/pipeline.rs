//! Config-driven benchmark grid: ingest, preprocess, split, tune, refit,
//! evaluate, then write metric matrices, leaderboards and a JSON report.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::aggregation::{aggregate_all, AggregationOptions, Leaderboard, MinimaxVariant, Rule, DEFAULT_BETA_HAT};
use crate::corpus::{
    binarize, event_weight_collapse, f_core, f_filter, prune_cold, read_interactions, temporal_split,
    EncodedSplit, FilterOrder, InteractionSet, Schema, SplitBundle, SplitRatios, Threshold, TimeUnit,
};
use crate::matrix::MetricMatrix;
use crate::metrics::{evaluate, GroundTruth, Metric, MetricReport};
use crate::models::{refit_final, tune, ModelConfig, ModelFamily};
use crate::seed::derive_seed;
use crate::{Error, Result};

pub const DEFAULT_BUDGET: usize = 40;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scale {
    /// Ratings on 0..5, default threshold 3.5.
    Rating,
    /// Weights on 0..1, default threshold 0.3.
    UnitWeight,
    /// Explicit threshold required.
    Custom,
    /// Keep every record (implicit feedback).
    #[default]
    Implicit,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterKind {
    /// One item pass, then one user pass.
    Filter,
    /// Iterated until every user and item has enough interactions.
    Core,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FilterSpec {
    pub kind: FilterKind,
    pub level: usize,
}

/// One input log and its preprocessing.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetConfig {
    pub name: String,
    pub path: PathBuf,
    #[serde(default = "default_user_col")]
    pub user_column: String,
    #[serde(default = "default_item_col")]
    pub item_column: String,
    #[serde(default = "default_weight_col")]
    pub weight_column: Option<String>,
    #[serde(default = "default_timestamp_col")]
    pub timestamp_column: Option<String>,
    #[serde(default)]
    pub event_column: Option<String>,
    #[serde(default)]
    pub timestamp_seconds: bool,
    #[serde(default)]
    pub scale: Scale,
    #[serde(default)]
    pub threshold: Option<f64>,
    #[serde(default)]
    pub filter: Option<FilterSpec>,
    #[serde(default = "default_split")]
    pub split: [f64; 3],
}

fn default_user_col() -> String {
    "user_id".into()
}

fn default_item_col() -> String {
    "item_id".into()
}

fn default_weight_col() -> Option<String> {
    Some("weight".into())
}

fn default_timestamp_col() -> Option<String> {
    Some("timestamp".into())
}

fn default_split() -> [f64; 3] {
    [0.8, 0.1, 0.1]
}

impl DatasetConfig {
    pub fn new(name: impl Into<String>, path: impl Into<PathBuf>) -> Self {
        DatasetConfig {
            name: name.into(),
            path: path.into(),
            user_column: default_user_col(),
            item_column: default_item_col(),
            weight_column: default_weight_col(),
            timestamp_column: default_timestamp_col(),
            event_column: None,
            timestamp_seconds: false,
            scale: Scale::Implicit,
            threshold: None,
            filter: None,
            split: default_split(),
        }
    }

    pub fn schema(&self) -> Schema {
        Schema {
            user: self.user_column.clone(),
            item: self.item_column.clone(),
            weight: self.weight_column.clone(),
            timestamp: self.timestamp_column.clone(),
            event: self.event_column.clone(),
            delimiter: None,
            time_unit: if self.timestamp_seconds {
                TimeUnit::Seconds
            } else {
                TimeUnit::Milliseconds
            },
        }
    }

    fn threshold(&self) -> Result<Option<Threshold>> {
        Ok(match (self.scale, self.threshold) {
            (Scale::Implicit, None) => None,
            (_, Some(t)) => Some(Threshold::Custom(t)),
            (Scale::Rating, None) => Some(Threshold::Rating),
            (Scale::UnitWeight, None) => Some(Threshold::UnitWeight),
            (Scale::Custom, None) => {
                return Err(Error::Config(format!("dataset {}: custom scale needs a threshold", self.name)))
            }
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelEntry {
    pub family: ModelFamily,
    #[serde(default = "default_budget")]
    pub budget: usize,
}

fn default_budget() -> usize {
    DEFAULT_BUDGET
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchmarkConfig {
    #[serde(default)]
    pub seed: u64,
    pub output: PathBuf,
    #[serde(default = "default_ks")]
    pub ks: Vec<usize>,
    #[serde(default = "default_metrics")]
    pub metrics: Vec<String>,
    #[serde(default = "default_rules")]
    pub rules: Vec<String>,
    #[serde(default = "default_beta_hat")]
    pub beta_hat: f64,
    #[serde(default)]
    pub minimax: MinimaxVariant,
    /// Worker threads for the grid; 0 uses every core.
    #[serde(default)]
    pub workers: usize,
    #[serde(rename = "dataset")]
    pub datasets: Vec<DatasetConfig>,
    #[serde(rename = "model")]
    pub models: Vec<ModelEntry>,
}

fn default_ks() -> Vec<usize> {
    vec![10]
}

fn default_metrics() -> Vec<String> {
    vec!["all".into()]
}

fn default_rules() -> Vec<String> {
    vec!["all".into()]
}

fn default_beta_hat() -> f64 {
    DEFAULT_BETA_HAT
}

impl BenchmarkConfig {
    /// Parses TOML; relative dataset and output paths resolve against `base`.
    pub fn from_toml(text: &str, base: &Path) -> Result<Self> {
        let mut cfg: BenchmarkConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        resolve(&mut cfg.output);
        for d in &mut cfg.datasets {
            resolve(&mut d.path);
        }
        Ok(cfg)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = crate::io::read_to_string(path)?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_toml(&text, base)
    }

    pub fn metric_list(&self) -> Result<Vec<Metric>> {
        if self.metrics.iter().any(|m| m == "all") {
            return Ok(Metric::ALL.to_vec());
        }
        let mut out: Vec<Metric> = Vec::new();
        for m in &self.metrics {
            let metric: Metric = m.parse()?;
            if !out.contains(&metric) {
                out.push(metric);
            }
        }
        Ok(out)
    }

    pub fn rule_list(&self) -> Result<Vec<Rule>> {
        let mut out: Vec<Rule> = Vec::new();
        for r in &self.rules {
            for rule in Rule::parse_list(r)? {
                if !out.contains(&rule) {
                    out.push(rule);
                }
            }
        }
        Ok(out)
    }

    pub fn aggregation(&self) -> AggregationOptions {
        AggregationOptions {
            beta_hat: self.beta_hat,
            minimax: self.minimax,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.datasets.is_empty() {
            return Err(Error::Config("at least one dataset is required".into()));
        }
        if self.models.len() < 2 {
            return Err(Error::Config("at least two models are required".into()));
        }
        let mut names = std::collections::BTreeSet::new();
        for d in &self.datasets {
            if !names.insert(d.name.as_str()) {
                return Err(Error::Config(format!("duplicate dataset name {:?}", d.name)));
            }
            if !d.path.exists() {
                return Err(Error::Config(format!("dataset {}: {} does not exist", d.name, d.path.display())));
            }
            d.threshold()?;
            SplitRatios::new(d.split[0], d.split[1], d.split[2])?;
            if let Some(f) = &d.filter {
                if f.level == 0 {
                    return Err(Error::Config(format!("dataset {}: filter level must be positive", d.name)));
                }
            }
        }
        let mut families = std::collections::BTreeSet::new();
        for m in &self.models {
            if !families.insert(m.family) {
                return Err(Error::Config(format!("model {} listed twice", m.family)));
            }
            if m.budget == 0 {
                return Err(Error::Config(format!("model {}: budget must be positive", m.family)));
            }
        }
        if self.ks.is_empty() || self.ks.contains(&0) {
            return Err(Error::Config("ks must be a non-empty list of positive cutoffs".into()));
        }
        if !(self.beta_hat >= 1.0 && self.beta_hat.is_finite()) {
            return Err(Error::Config("beta_hat must be at least 1".into()));
        }
        self.metric_list()?;
        self.rule_list()?;
        Ok(())
    }
}

/// Reads and preprocesses one dataset up to the split.
pub fn prepare_interactions(d: &DatasetConfig) -> Result<InteractionSet> {
    let mut data = read_interactions(&d.path, &d.schema())?;
    if data.has_events() {
        data = event_weight_collapse(&data)?;
    }
    if let Some(t) = d.threshold()? {
        data = binarize(&data, t)?;
    }
    if let Some(f) = &d.filter {
        data = match f.kind {
            FilterKind::Filter => f_filter(&data, f.level, FilterOrder::ItemsThenUsers)?,
            FilterKind::Core => f_core(&data, f.level)?,
        };
    }
    Ok(data)
}

/// Splits in time and drops cold validation and test records.
pub fn split_dataset(data: &InteractionSet, d: &DatasetConfig) -> Result<SplitBundle> {
    let ratios = SplitRatios::new(d.split[0], d.split[1], d.split[2])?;
    prune_cold(&temporal_split(data, ratios)?)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub name: String,
    pub users: usize,
    pub items: usize,
    pub interactions: usize,
    pub train: usize,
    pub validation: usize,
    pub test: usize,
    pub test_users: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub dataset: String,
    pub model: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub config: Option<ModelConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub best_validation_ndcg: Option<f64>,
    pub trials: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub metrics: Option<MetricReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixOutcome {
    pub name: String,
    pub file: String,
    pub excluded_methods: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub matrix: Option<MetricMatrix>,
    pub leaderboards: BTreeMap<String, Leaderboard>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub seed: u64,
    pub datasets: Vec<DatasetSummary>,
    pub failed_datasets: BTreeMap<String, String>,
    pub cells: Vec<CellResult>,
    pub matrices: Vec<MatrixOutcome>,
    /// Written files relative to the output directory.
    pub files: Vec<String>,
}

impl BenchmarkReport {
    pub fn matrix(&self, metric: Metric, k: usize) -> Option<&MetricMatrix> {
        let name = format!("{}@{k}", metric.name());
        self.matrices.iter().find(|m| m.name == name)?.matrix.as_ref()
    }
}

fn run_cell(split: &EncodedSplit, family: ModelFamily, budget: usize, seed: u64, ks: &[usize]) -> Result<(ModelConfig, Option<f64>, usize, MetricReport)> {
    let outcome = tune(family, split, budget, seed)?;
    let best_val = outcome
        .trials
        .iter()
        .find(|t| t.config == outcome.best)
        .map(|t| t.validation_ndcg);
    let model = refit_final(&outcome.best, split)?;
    let history = split.train_validation();
    let truth = GroundTruth::new(&split.test, &history)?;
    let k_max = *ks.iter().max().expect("validated");
    let lists = model.recommend_users(truth.users(), k_max);
    let report = evaluate(&lists, &truth, ks)?;
    let fits = outcome.fits();
    Ok((outcome.best, best_val, fits, report))
}

/// Dataset labels, method labels and values of a complete grid.
type Grid = (Vec<String>, Vec<String>, Vec<Vec<f64>>);

/// Drops methods with any missing cell and datasets where every cell is missing.
fn complete_matrix(
    datasets: &[String],
    methods: &[String],
    cells: &[Vec<Option<f64>>],
) -> (Option<Grid>, Vec<String>) {
    let rows: Vec<usize> = (0..datasets.len()).filter(|&t| cells[t].iter().any(Option::is_some)).collect();
    let cols: Vec<usize> = (0..methods.len())
        .filter(|&i| rows.iter().all(|&t| cells[t][i].is_some()))
        .collect();
    let excluded: Vec<String> = (0..methods.len())
        .filter(|i| !cols.contains(i))
        .map(|i| methods[i].clone())
        .collect();
    if rows.is_empty() || cols.is_empty() {
        return (None, excluded);
    }
    let values = rows
        .iter()
        .map(|&t| cols.iter().map(|&i| cells[t][i].expect("complete")).collect())
        .collect();
    (
        Some((
            rows.iter().map(|&t| datasets[t].clone()).collect(),
            cols.iter().map(|&i| methods[i].clone()).collect(),
            values,
        )),
        excluded,
    )
}

/// Runs the grid and writes every artifact under `config.output`.
pub fn run_benchmark(config: &BenchmarkConfig) -> Result<BenchmarkReport> {
    config.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| Error::Config(e.to_string()))?;
    pool.install(|| run_inner(config))
}

fn run_inner(config: &BenchmarkConfig) -> Result<BenchmarkReport> {
    let metrics = config.metric_list()?;
    let rules = config.rule_list()?;
    let opts = config.aggregation();
    let out = &config.output;

    let prepared: Vec<Result<(DatasetSummary, EncodedSplit)>> = config
        .datasets
        .par_iter()
        .map(|d| {
            let data = prepare_interactions(d)?;
            let bundle = split_dataset(&data, d)?;
            let split = bundle.encode()?;
            let test_users = (0..split.test.n_users() as u32)
                .filter(|&u| !split.test.row(u).is_empty())
                .count();
            Ok((
                DatasetSummary {
                    name: d.name.clone(),
                    users: data.n_users(),
                    items: data.n_items(),
                    interactions: data.n_records(),
                    train: bundle.train.n_records(),
                    validation: bundle.validation.n_records(),
                    test: bundle.test.n_records(),
                    test_users,
                },
                split,
            ))
        })
        .collect();

    let grid: Vec<(usize, usize)> = (0..config.datasets.len())
        .flat_map(|t| (0..config.models.len()).map(move |i| (t, i)))
        .collect();
    let cells: Vec<CellResult> = grid
        .par_iter()
        .map(|&(t, i)| {
            let d = &config.datasets[t];
            let m = &config.models[i];
            let seed = derive_seed(config.seed, "cell", &[t as u64, i as u64]);
            let result = match &prepared[t] {
                Ok((_, split)) => run_cell(split, m.family, m.budget, seed, &config.ks),
                Err(e) => Err(Error::invalid(format!("dataset failed: {e}"))),
            };
            match result {
                Ok((cfg, val, trials, report)) => CellResult {
                    dataset: d.name.clone(),
                    model: m.family.label().into(),
                    config: Some(cfg),
                    best_validation_ndcg: val,
                    trials,
                    metrics: Some(report),
                    error: None,
                },
                Err(e) => {
                    log::warn!("cell ({}, {}) failed: {e}", d.name, m.family);
                    CellResult {
                        dataset: d.name.clone(),
                        model: m.family.label().into(),
                        config: None,
                        best_validation_ndcg: None,
                        trials: 0,
                        metrics: None,
                        error: Some(e.to_string()),
                    }
                }
            }
        })
        .collect();

    let mut summaries = Vec::new();
    let mut failed = BTreeMap::new();
    for (d, p) in config.datasets.iter().zip(&prepared) {
        match p {
            Ok((s, _)) => summaries.push(s.clone()),
            Err(e) => {
                failed.insert(d.name.clone(), e.to_string());
            }
        }
    }

    let dataset_names: Vec<String> = config.datasets.iter().map(|d| d.name.clone()).collect();
    let method_names: Vec<String> = config.models.iter().map(|m| m.family.label().to_string()).collect();
    let mut files = Vec::new();
    let mut matrices = Vec::new();
    for &k in &config.ks {
        for &metric in &metrics {
            let name = format!("{}@{k}", metric.name());
            let grid_values: Vec<Vec<Option<f64>>> = (0..dataset_names.len())
                .map(|t| {
                    (0..method_names.len())
                        .map(|i| cells[t * method_names.len() + i].metrics.as_ref().and_then(|r| r.get(metric, k)))
                        .collect()
                })
                .collect();
            let (complete, excluded) = complete_matrix(&dataset_names, &method_names, &grid_values);
            if !excluded.is_empty() {
                log::warn!("{name}: excluding incomplete methods {excluded:?}");
            }
            let file = format!("matrices/{name}.csv");
            let mut outcome = MatrixOutcome {
                name: name.clone(),
                file: file.clone(),
                excluded_methods: excluded,
                matrix: None,
                leaderboards: BTreeMap::new(),
            };
            if let Some((rows, cols, values)) = complete {
                let q = MetricMatrix::new(rows, cols, values)?.with_metric(metric.name(), Some(k));
                q.write(&out.join(&file))?;
                files.push(file);
                for rule in &rules {
                    match aggregate_all(&q, std::slice::from_ref(rule), &opts) {
                        Ok(boards) => {
                            for (rule_name, board) in boards {
                                let lf = format!("leaderboards/{name}/{rule_name}.csv");
                                crate::io::write_atomic(&out.join(&lf), board.to_csv().as_bytes())?;
                                files.push(lf);
                                outcome.leaderboards.insert(rule_name, board);
                            }
                        }
                        Err(e) => log::warn!("{name}: rule {} failed: {e}", rule.name()),
                    }
                }
                outcome.matrix = Some(q);
            }
            matrices.push(outcome);
        }
    }
    files.push("report.json".into());
    let report = BenchmarkReport {
        seed: config.seed,
        datasets: summaries,
        failed_datasets: failed,
        cells,
        matrices,
        files,
    };
    crate::io::write_json(&out.join("report.json"), &report)?;
    Ok(report)
}
