use std::path::Path;

use recbench::aggregation::{aggregate, AggregationOptions, Direction, Leaderboard, Rule};
use recbench::seed::rng;
use recbench::stability::{
    add_best_method, add_similar_method, beta_sensitivity, drop_datasets_curve, drop_methods_curve, parse_grid,
    pareto_violations, search_counterexample, subset_pair_consistency, Counterexample, RandomMatrixSpec,
};
use recbench::synthetic::random_metric_matrix;
use recbench::MetricMatrix;

fn fixtures() -> Vec<Counterexample> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/counterexamples.json");
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn sample_q() -> MetricMatrix {
    random_metric_matrix(&mut rng(5), 12, 6).unwrap()
}

#[test]
fn fixtures_replay_and_regenerate() {
    let opts = AggregationOptions::default();
    let cases = fixtures();
    assert_eq!(cases.len(), 7);
    for case in &cases {
        let inj = case.replay(&opts).unwrap();
        assert!((inj.spearman - case.spearman).abs() < 1e-12);
        assert!(inj.spearman < 1.0);
        let again = search_counterexample(case.rule, case.perturbation, &opts, RandomMatrixSpec::default(), case.attempt + 1, case.seed)
            .unwrap()
            .expect("search finds the stored case");
        assert_eq!(&again.q, &case.q);
        assert_eq!(again.after, case.after);
    }
}

#[test]
fn fixture_json_round_trips() {
    for case in fixtures() {
        let text = serde_json::to_string(&case).unwrap();
        let back: Counterexample = serde_json::from_str(&text).unwrap();
        assert_eq!(back, case);
    }
}

#[test]
fn identity_parameters_give_one() {
    let q = sample_q();
    let opts = AggregationOptions::default();
    for rule in Rule::ALL {
        let drop = drop_datasets_curve(&q, rule, &opts, &[0], 5, 1).unwrap();
        assert_eq!(drop.points[0].mean, 1.0, "{}", rule.name());
        let cols = drop_methods_curve(&q, rule, &opts, &[0], 5, 1).unwrap();
        assert_eq!(cols.points[0].mean, 1.0, "{}", rule.name());
        let full = subset_pair_consistency(&q, rule, &opts, q.n_datasets(), 3, 1).unwrap();
        assert_eq!(full.points[0].mean, 1.0, "{}", rule.name());
    }
    for report in beta_sensitivity(&q, &[3.0], 3.0).unwrap() {
        assert_eq!(report.points[0].mean, 1.0);
    }
}

#[test]
fn mean_aggregation_ignores_any_new_column() {
    let q = sample_q();
    let opts = AggregationOptions::default();
    for rule in [Rule::Arithmetic, Rule::Geometric, Rule::Harmonic] {
        for alpha in [1.0, 2.5, 4.0] {
            assert_eq!(add_best_method(&q, rule, &opts, alpha).unwrap().spearman, 1.0);
        }
        for target in 0..q.n_methods() {
            assert_eq!(add_similar_method(&q, rule, &opts, target, 0.85).unwrap().spearman, 1.0);
        }
    }
    assert!(add_best_method(&q, Rule::Arithmetic, &opts, 4.5).is_err());
}

#[test]
fn curves_are_deterministic() {
    let q = sample_q();
    let opts = AggregationOptions::default();
    let a = drop_datasets_curve(&q, Rule::DmAuc, &opts, &[1, 3, 6], 20, 9).unwrap();
    let b = drop_datasets_curve(&q, Rule::DmAuc, &opts, &[1, 3, 6], 20, 9).unwrap();
    assert_eq!(a, b);
    assert!(a.points.iter().all(|p| (-1.0..=1.0).contains(&p.mean)));
}

#[test]
fn pareto_detects_a_negated_rule() {
    let q = MetricMatrix::from_rows(vec![vec![0.9, 0.5], vec![0.8, 0.4]]).unwrap();
    let good = aggregate(&q, Rule::Arithmetic, &AggregationOptions::default()).unwrap();
    assert!(pareto_violations(&q, &good).unwrap().violations.is_empty());
    let scores: Vec<f64> = q.methods().iter().map(|m| -good.score(m).unwrap()).collect();
    let broken = Leaderboard::new("negated", Direction::HigherBetter, q.methods(), &scores);
    assert_eq!(pareto_violations(&q, &broken).unwrap().violations.len(), 1);
}

#[test]
fn grids_parse() {
    assert_eq!(parse_grid("1:4:0.25").unwrap().len(), 13);
    assert_eq!(parse_grid("0.85:1.15:0.05").unwrap().len(), 7);
    assert_eq!(parse_grid("1, 2,5").unwrap(), vec![1.0, 2.0, 5.0]);
    assert!(parse_grid("3:1:1").is_err());
}
