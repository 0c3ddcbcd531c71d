//! `recbench` command-line front end.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use recbench::aggregation::{aggregate_all, dm_profile, AggregationOptions, MinimaxVariant, Rule, DEFAULT_BETA_HAT};
use recbench::characteristics::{compute_characteristics, CharacteristicsTable};
use recbench::corpus::{read_interactions, Schema};
use recbench::io::{write_atomic, write_json};
use recbench::matrix::{read_metric_matrix, MetricMatrix};
use recbench::metrics::metric_correlation;
use recbench::pipeline::{prepare_interactions, run_benchmark, split_dataset, BenchmarkConfig, DatasetConfig, FilterKind, FilterSpec, Scale};
use recbench::plot::{cd_svg, dm_curves, dm_svg, PlotData};
use recbench::selection::{
    fidelity_table, optimal_design_select, random_select, select_principal_kmeans, DesignCriterion, FeatureTable,
    FidelityOptions, KMeansPipelineOptions, DEFAULT_DESIGN_RESTARTS,
};
use recbench::stability::{
    add_best_curve, add_similar_curve, beta_sensitivity, drop_datasets_curve, drop_methods_curve, parse_grid,
    subset_pair_consistency, DEFAULT_TRIALS,
};
use recbench::stats::{cd_diagram_data, pairwise_tests};

#[derive(Parser)]
#[command(name = "recbench", version, about = "Offline benchmarking of top-N recommenders")]
struct Cli {
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and preprocess a raw log; write the canonical interaction file.
    Ingest(IngestArgs),
    /// Split a log in time, prune cold records and write the three parts.
    Split(SplitArgs),
    /// Tune, fit and evaluate the configured models; write metric matrices.
    Eval(ConfigArgs),
    /// Validate an external metric matrix and write it in canonical form.
    ImportQ(ImportArgs),
    /// Compute the characteristics table of one or more logs.
    Chars(CharsArgs),
    /// Aggregate a metric matrix into leaderboards.
    Aggregate(AggregateArgs),
    /// Pairwise tests, CD-diagram data and performance profiles.
    Compare(CompareArgs),
    /// Metric-by-metric correlation averaged over datasets.
    Corr(CorrArgs),
    /// Ranking stability under perturbations.
    Stress(StressArgs),
    /// Representative dataset subset selection and fidelity.
    Select(SelectArgs),
    /// Merge JSON outputs into one report.
    Report(ReportArgs),
    /// Run the full benchmark from a config file.
    Run(ConfigArgs),
}

#[derive(Args)]
struct IngestArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
    #[command(flatten)]
    columns: ColumnArgs,
    #[arg(long, value_enum, default_value = "implicit")]
    scale: ScaleArg,
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long, value_enum)]
    filter: Option<FilterArg>,
    #[arg(long, default_value_t = 5)]
    filter_level: usize,
}

#[derive(Args, Clone)]
struct ColumnArgs {
    #[arg(long, default_value = "user_id")]
    user_column: String,
    #[arg(long, default_value = "item_id")]
    item_column: String,
    #[arg(long, default_value = "weight")]
    weight_column: String,
    #[arg(long, default_value = "timestamp")]
    timestamp_column: String,
    #[arg(long)]
    event_column: Option<String>,
    /// Timestamps are in seconds rather than milliseconds.
    #[arg(long)]
    seconds: bool,
}

impl ColumnArgs {
    fn dataset(&self, name: &str, path: &Path) -> DatasetConfig {
        let mut d = DatasetConfig::new(name, path);
        d.user_column = self.user_column.clone();
        d.item_column = self.item_column.clone();
        d.weight_column = Some(self.weight_column.clone());
        d.timestamp_column = Some(self.timestamp_column.clone());
        d.event_column = self.event_column.clone();
        d.timestamp_seconds = self.seconds;
        d
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ScaleArg {
    Rating,
    UnitWeight,
    Custom,
    Implicit,
}

#[derive(Clone, Copy, ValueEnum)]
enum FilterArg {
    Filter,
    Core,
}

#[derive(Args)]
struct SplitArgs {
    /// Canonical interaction file.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output_dir: PathBuf,
    /// Train, validation and test shares.
    #[arg(long, value_delimiter = ',', default_value = "0.8,0.1,0.1")]
    ratios: Vec<f64>,
}

#[derive(Args)]
struct ConfigArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config's master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the config's output directory.
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// Overrides the config's worker count.
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args)]
struct ImportArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args)]
struct CharsArgs {
    /// Canonical interaction files; dataset labels are the file stems.
    #[arg(long, num_args = 1.., required = true)]
    inputs: Vec<PathBuf>,
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args, Clone, Copy)]
struct AggregationArgs {
    #[arg(long, default_value_t = DEFAULT_BETA_HAT)]
    beta_hat: f64,
    #[arg(long, value_enum, default_value = "winning-votes")]
    minimax: MinimaxArg,
}

impl AggregationArgs {
    fn options(self) -> AggregationOptions {
        AggregationOptions {
            beta_hat: self.beta_hat,
            minimax: match self.minimax {
                MinimaxArg::WinningVotes => MinimaxVariant::WinningVotes,
                MinimaxArg::LiteralCount => MinimaxVariant::LiteralCount,
            },
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum MinimaxArg {
    WinningVotes,
    LiteralCount,
}

#[derive(Args)]
struct AggregateArgs {
    #[arg(long)]
    matrix: PathBuf,
    /// Comma-separated rule names or `all`.
    #[arg(long, default_value = "all")]
    rules: String,
    #[arg(long)]
    output_dir: PathBuf,
    #[command(flatten)]
    aggregation: AggregationArgs,
}

#[derive(Args)]
struct CompareArgs {
    #[arg(long)]
    matrix: PathBuf,
    #[arg(long)]
    output_dir: PathBuf,
    /// Region of practical equivalence for the Bayesian test; 0 disables it.
    #[arg(long, default_value_t = 0.0)]
    rope: f64,
    #[arg(long, default_value_t = 50_000)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_BETA_HAT)]
    beta_hat: f64,
}

#[derive(Args)]
struct CorrArgs {
    /// One matrix per metric over the same datasets and methods.
    #[arg(long, num_args = 2.., required = true)]
    matrices: Vec<PathBuf>,
    #[arg(long)]
    output: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum StressKind {
    DropDatasets,
    SubsetPairs,
    DropMethods,
    AddSimilar,
    AddBest,
    Beta,
}

#[derive(Args)]
struct StressArgs {
    #[arg(long)]
    matrix: PathBuf,
    #[arg(long, value_enum)]
    kind: StressKind,
    #[arg(long, default_value = "dm_auc")]
    rule: String,
    /// α grid `start:stop:step` or a comma list; also the β̂ grid for `beta`.
    #[arg(long)]
    alpha: Option<String>,
    /// Drop counts for the drop kinds, comma separated.
    #[arg(long, value_delimiter = ',')]
    drops: Vec<usize>,
    /// Subset size for `subset-pairs`.
    #[arg(long, default_value_t = 5)]
    size: usize,
    #[arg(long, default_value_t = DEFAULT_TRIALS)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    output: PathBuf,
    #[command(flatten)]
    aggregation: AggregationArgs,
}

#[derive(Clone, Copy, ValueEnum)]
enum SelectMethod {
    Kmeans,
    Random,
    AOptimal,
    DOptimal,
}

#[derive(Args)]
struct SelectArgs {
    /// Characteristics table (`dataset,<features>`).
    #[arg(long)]
    features: PathBuf,
    #[arg(long, value_enum, default_value = "kmeans")]
    method: SelectMethod,
    #[arg(long, default_value_t = 6)]
    count: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    output: PathBuf,
    /// Also write the dataset-to-cluster table here.
    #[arg(long)]
    assignment: Option<PathBuf>,
    /// Metric matrices to score every selector against; writes a fidelity table.
    #[arg(long, num_args = 1..)]
    fidelity: Vec<PathBuf>,
    #[arg(long)]
    fidelity_output: Option<PathBuf>,
    #[arg(long, default_value_t = 500)]
    simulations: usize,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(long, num_args = 1.., required = true)]
    inputs: Vec<PathBuf>,
    #[arg(long)]
    output: PathBuf,
}

fn main() {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match dispatch(cli.command) {
        Ok(written) => {
            for path in written {
                println!("{}", path.display());
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            std::process::exit(1);
        }
    }
}

fn dispatch(command: Command) -> Result<Vec<PathBuf>> {
    match command {
        Command::Ingest(a) => ingest(a),
        Command::Split(a) => split(a),
        Command::Eval(a) => bench(a, false),
        Command::ImportQ(a) => import_q(a),
        Command::Chars(a) => chars(a),
        Command::Aggregate(a) => aggregate_cmd(a),
        Command::Compare(a) => compare(a),
        Command::Corr(a) => corr(a),
        Command::Stress(a) => stress(a),
        Command::Select(a) => select(a),
        Command::Report(a) => report(a),
        Command::Run(a) => bench(a, true),
    }
}

fn stem(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

fn read_matrix(path: &Path) -> Result<MetricMatrix> {
    read_metric_matrix(path).with_context(|| format!("reading {}", path.display()))
}

fn ingest(a: IngestArgs) -> Result<Vec<PathBuf>> {
    let mut d = a.columns.dataset(&stem(&a.input), &a.input);
    d.scale = match a.scale {
        ScaleArg::Rating => Scale::Rating,
        ScaleArg::UnitWeight => Scale::UnitWeight,
        ScaleArg::Custom => Scale::Custom,
        ScaleArg::Implicit => Scale::Implicit,
    };
    d.threshold = a.threshold;
    d.filter = a.filter.map(|f| FilterSpec {
        kind: match f {
            FilterArg::Filter => FilterKind::Filter,
            FilterArg::Core => FilterKind::Core,
        },
        level: a.filter_level,
    });
    let data = prepare_interactions(&d)?;
    write_atomic(&a.output, data.to_canonical_string()?.as_bytes())?;
    log::info!("{} users, {} items, {} interactions", data.n_users(), data.n_items(), data.n_records());
    Ok(vec![a.output])
}

fn split(a: SplitArgs) -> Result<Vec<PathBuf>> {
    let [train, validation, test] = a.ratios[..] else {
        bail!("--ratios needs exactly three values");
    };
    let mut d = DatasetConfig::new(stem(&a.input), &a.input);
    d.split = [train, validation, test];
    let data = read_interactions(&a.input, &Schema::default())?;
    let bundle = split_dataset(&data, &d)?;
    let mut written = Vec::new();
    for (name, part) in [("train", &bundle.train), ("validation", &bundle.validation), ("test", &bundle.test)] {
        let path = a.output_dir.join(format!("{name}.csv"));
        // Original labels are kept so the three parts share one id space.
        let mut text = String::from("user_id,item_id,weight,timestamp\n");
        for r in part.records() {
            text.push_str(&format!("{},{},{},{}\n", r.user, r.item, r.weight, r.timestamp));
        }
        write_atomic(&path, text.as_bytes())?;
        written.push(path);
    }
    Ok(written)
}

fn bench(a: ConfigArgs, aggregate: bool) -> Result<Vec<PathBuf>> {
    let mut cfg = BenchmarkConfig::read(&a.config)?;
    if let Some(seed) = a.seed {
        cfg.seed = seed;
    }
    if let Some(dir) = a.output_dir {
        cfg.output = dir;
    }
    if let Some(w) = a.workers {
        cfg.workers = w;
    }
    if !aggregate {
        cfg.rules.clear();
    }
    let report = run_benchmark(&cfg)?;
    let failed: Vec<_> = report.cells.iter().filter(|c| c.error.is_some()).collect();
    for c in &failed {
        log::warn!("missing cell ({}, {}): {}", c.dataset, c.model, c.error.as_deref().unwrap_or(""));
    }
    Ok(report.files.iter().map(|f| cfg.output.join(f)).collect())
}

fn import_q(a: ImportArgs) -> Result<Vec<PathBuf>> {
    let q = read_matrix(&a.input)?;
    q.write(&a.output)?;
    Ok(vec![a.output])
}

fn chars(a: CharsArgs) -> Result<Vec<PathBuf>> {
    let mut table = CharacteristicsTable::default();
    for path in &a.inputs {
        let data = read_interactions(path, &Schema::default()).with_context(|| format!("reading {}", path.display()))?;
        table.rows.push((stem(path), compute_characteristics(&data)?));
    }
    table.write(&a.output)?;
    Ok(vec![a.output])
}

fn aggregate_cmd(a: AggregateArgs) -> Result<Vec<PathBuf>> {
    let q = read_matrix(&a.matrix)?;
    let rules = Rule::parse_list(&a.rules)?;
    let boards = aggregate_all(&q, &rules, &a.aggregation.options())?;
    let mut written = Vec::new();
    for (name, board) in boards {
        let path = a.output_dir.join(format!("{name}.csv"));
        write_atomic(&path, board.to_csv().as_bytes())?;
        written.push(path);
    }
    Ok(written)
}

fn compare(a: CompareArgs) -> Result<Vec<PathBuf>> {
    let q = read_matrix(&a.matrix)?;
    let tests = pairwise_tests(&q, a.rope, a.samples, a.seed)?;
    let cd = cd_diagram_data(&q, &tests)?;
    let profile = dm_profile(&q, a.beta_hat)?;
    let curves = dm_curves(&profile);
    let plot = PlotData {
        cd: Some(cd.clone()),
        beta_hat: Some(a.beta_hat),
        dm: curves.clone(),
    };
    let dir = &a.output_dir;
    let files = [dir.join("tests.json"), dir.join("plot.json"), dir.join("cd.svg"), dir.join("dm.svg")];
    write_json(&files[0], &tests)?;
    write_json(&files[1], &plot)?;
    write_atomic(&files[2], cd_svg(&cd).as_bytes())?;
    write_atomic(&files[3], dm_svg(&curves, a.beta_hat).as_bytes())?;
    Ok(files.to_vec())
}

fn corr(a: CorrArgs) -> Result<Vec<PathBuf>> {
    let matrices: Vec<MetricMatrix> = a.matrices.iter().map(|p| read_matrix(p)).collect::<Result<_>>()?;
    write_json(&a.output, &metric_correlation(&matrices)?)?;
    Ok(vec![a.output])
}

fn stress(a: StressArgs) -> Result<Vec<PathBuf>> {
    let q = read_matrix(&a.matrix)?;
    let rule: Rule = a.rule.parse()?;
    let opts = a.aggregation.options();
    let grid = |default: &str| parse_grid(a.alpha.as_deref().unwrap_or(default));
    let drops = |max: usize| -> Vec<usize> {
        if a.drops.is_empty() {
            (1..=max).collect()
        } else {
            a.drops.clone()
        }
    };
    let reports = match a.kind {
        StressKind::DropDatasets => vec![drop_datasets_curve(
            &q,
            rule,
            &opts,
            &drops(q.n_datasets().saturating_sub(2)),
            a.trials,
            a.seed,
        )?],
        StressKind::SubsetPairs => vec![subset_pair_consistency(&q, rule, &opts, a.size, a.trials, a.seed)?],
        StressKind::DropMethods => vec![drop_methods_curve(
            &q,
            rule,
            &opts,
            &drops(q.n_methods().saturating_sub(2)),
            a.trials,
            a.seed,
        )?],
        StressKind::AddSimilar => vec![add_similar_curve(&q, rule, &opts, &grid("0.85:1.15:0.05")?)?],
        StressKind::AddBest => vec![add_best_curve(&q, rule, &opts, &grid("1:4:0.25")?)?],
        StressKind::Beta => beta_sensitivity(&q, &grid("1:6:0.5")?, opts.beta_hat)?,
    };
    if reports.len() == 1 {
        write_json(&a.output, &reports[0])?;
    } else {
        write_json(&a.output, &reports)?;
    }
    Ok(vec![a.output])
}

fn select(a: SelectArgs) -> Result<Vec<PathBuf>> {
    let table = CharacteristicsTable::read_path(&a.features)?;
    let f = FeatureTable::from_characteristics(&table)?;
    let result = match a.method {
        SelectMethod::Kmeans => select_principal_kmeans(&f, a.count, a.seed, &KMeansPipelineOptions::default())?,
        SelectMethod::Random => random_select(&f.rows, a.count, a.seed)?,
        SelectMethod::AOptimal => {
            optimal_design_select(&f, a.count, DesignCriterion::A, DEFAULT_DESIGN_RESTARTS, a.seed, 0.95)?
        }
        SelectMethod::DOptimal => {
            optimal_design_select(&f, a.count, DesignCriterion::D, DEFAULT_DESIGN_RESTARTS, a.seed, 0.95)?
        }
    };
    let mut written = vec![a.output.clone()];
    write_json(&a.output, &result)?;
    if let Some(path) = a.assignment {
        match result.assignment_csv(&f.rows) {
            Some(text) => {
                write_atomic(&path, text.as_bytes())?;
                written.push(path);
            }
            None => bail!("the {} selector produces no cluster assignment", result.method),
        }
    }
    if !a.fidelity.is_empty() {
        let Some(out) = a.fidelity_output else {
            bail!("--fidelity needs --fidelity-output");
        };
        let metrics: Vec<(String, MetricMatrix)> = a
            .fidelity
            .iter()
            .map(|p| {
                let q = read_matrix(p)?;
                Ok((column_label(&q), q))
            })
            .collect::<Result<_>>()?;
        let opts = FidelityOptions {
            target_count: a.count,
            simulations: a.simulations,
            ..FidelityOptions::default()
        };
        let tab = fidelity_table(&f, &metrics, &opts, a.seed)?;
        write_atomic(&out, tab.to_csv().as_bytes())?;
        written.push(out);
    }
    Ok(written)
}

/// Fidelity column label: `nDCG@10` for per-user metrics, `Coverage` for
/// catalog metrics, the raw name otherwise.
fn column_label(q: &MetricMatrix) -> String {
    match (q.metric.parse::<recbench::metrics::Metric>(), q.k) {
        (Ok(m), Some(k)) if m.is_user_metric() => format!("{}@{k}", m.label()),
        (Ok(m), _) => m.label().to_string(),
        (Err(_), _) => q.name(),
    }
}

fn report(a: ReportArgs) -> Result<Vec<PathBuf>> {
    let mut merged = BTreeMap::new();
    for path in &a.inputs {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let value: serde_json::Value =
            serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        if merged.insert(stem(path), value).is_some() {
            bail!("two inputs share the name {}", stem(path));
        }
    }
    write_json(&a.output, &merged)?;
    Ok(vec![a.output])
}
