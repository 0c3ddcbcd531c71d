use proptest::prelude::*;

use recbench::aggregation::{aggregate, dm_profile, AggregationOptions, Direction, Leaderboard, Rule};
use recbench::MetricMatrix;

fn q_strategy() -> impl Strategy<Value = MetricMatrix> {
    (1usize..12, 2usize..8).prop_flat_map(|(d, m)| {
        prop::collection::vec(prop::collection::vec(0.01f64..1.0, m), d)
            .prop_map(|rows| MetricMatrix::from_rows(rows).unwrap())
    })
}

/// Raw profile area: each dataset contributes `(β̂ − r)⁺ / d`.
fn area_oracle(q: &MetricMatrix, method: usize, beta_hat: f64) -> f64 {
    q.rows()
        .map(|row| {
            let best = row.iter().copied().fold(0.0, f64::max);
            (beta_hat - best / row[method]).max(0.0)
        })
        .sum::<f64>()
        / q.n_datasets() as f64
}

fn copeland_oracle(q: &MetricMatrix, a: usize) -> f64 {
    let beats = |x: usize, y: usize| q.rows().filter(|r| r[x] > r[y]).count();
    (0..q.n_methods())
        .filter(|&b| b != a)
        .map(|b| (beats(a, b) as i64 - beats(b, a) as i64).signum() as f64)
        .sum()
}

fn minimax_oracle(q: &MetricMatrix, a: usize) -> f64 {
    let beats = |x: usize, y: usize| q.rows().filter(|r| r[x] > r[y]).count();
    let worst = (0..q.n_methods())
        .filter(|&b| b != a && beats(b, a) > beats(a, b))
        .map(|b| beats(b, a))
        .max()
        .unwrap_or(0);
    -(worst as f64)
}

fn assert_valid(board: &Leaderboard, m: usize) {
    assert_eq!(board.entries.len(), m);
    for w in board.entries.windows(2) {
        let ok = match board.direction {
            Direction::HigherBetter => w[0].score > w[1].score,
            Direction::LowerBetter => w[0].score < w[1].score,
        } || (w[0].score == w[1].score && w[0].method < w[1].method);
        assert!(ok, "{} out of order: {:?}", board.rule, board.entries);
    }
}

#[test]
fn three_by_three_example() {
    // Three datasets, three methods; m0 best on two, m2 best on one.
    let q = MetricMatrix::from_rows(vec![vec![0.30, 0.20, 0.10], vec![0.25, 0.24, 0.05], vec![0.10, 0.12, 0.20]])
        .unwrap();
    let opts = AggregationOptions::default();
    let arith = aggregate(&q, Rule::Arithmetic, &opts).unwrap();
    assert_eq!(arith.order(), vec!["m0", "m1", "m2"]);
    let ranks = aggregate(&q, Rule::MeanRanks, &opts).unwrap();
    assert!((ranks.score("m0").unwrap() - 5.0 / 3.0).abs() < 1e-12);
    assert_eq!(aggregate(&q, Rule::Copeland, &opts).unwrap().winner(), "m0");
}

#[test]
fn leaderboard_csv_round_trips() {
    let q = MetricMatrix::from_rows(vec![vec![0.3, 0.2, 0.25], vec![0.1, 0.4, 0.2]]).unwrap();
    let board = aggregate(&q, Rule::Geometric, &AggregationOptions::default()).unwrap();
    let back = Leaderboard::from_csv(&board.rule, board.direction, &board.to_csv()).unwrap();
    assert_eq!(back.order(), board.order());
}

proptest! {
    #[test]
    fn dm_areas_match_closed_form(q in q_strategy(), beta_hat in 1.0f64..6.0) {
        let profile = dm_profile(&q, beta_hat).unwrap();
        let total: f64 = (0..q.n_methods()).map(|i| area_oracle(&q, i, beta_hat)).sum();
        for i in 0..q.n_methods() {
            let raw = area_oracle(&q, i, beta_hat);
            prop_assert!((profile.raw_areas[i] - raw).abs() < 1e-12);
            if total > 0.0 {
                prop_assert!((profile.normalized_areas[i] - raw / total).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn social_rules_match_pairwise_counts(q in q_strategy()) {
        let opts = AggregationOptions::default();
        let cop = aggregate(&q, Rule::Copeland, &opts).unwrap();
        let mm = aggregate(&q, Rule::Minimax, &opts).unwrap();
        for (a, name) in q.methods().iter().enumerate() {
            prop_assert_eq!(cop.score(name), Some(copeland_oracle(&q, a)));
            prop_assert_eq!(mm.score(name), Some(minimax_oracle(&q, a)));
        }
    }

    #[test]
    fn every_rule_yields_a_valid_leaderboard(q in q_strategy()) {
        let opts = AggregationOptions::default();
        for rule in Rule::ALL {
            let board = aggregate(&q, rule, &opts).unwrap();
            assert_valid(&board, q.n_methods());
            prop_assert_eq!(board.direction, rule.direction());
        }
    }

    #[test]
    fn column_permutation_does_not_change_scores(q in q_strategy(), shift in 1usize..7) {
        let m = q.n_methods();
        let perm: Vec<usize> = (0..m).map(|i| (i + shift) % m).collect();
        let rows: Vec<Vec<f64>> = q.rows().map(|r| perm.iter().map(|&j| r[j]).collect()).collect();
        let names: Vec<String> = perm.iter().map(|&j| q.methods()[j].clone()).collect();
        let p = MetricMatrix::new(q.datasets().to_vec(), names, rows).unwrap();
        let opts = AggregationOptions::default();
        for rule in Rule::ALL {
            let (a, b) = (aggregate(&q, rule, &opts).unwrap(), aggregate(&p, rule, &opts).unwrap());
            for name in q.methods() {
                let (x, y) = (a.score(name).unwrap(), b.score(name).unwrap());
                prop_assert!((x - y).abs() <= 1e-12 * x.abs().max(1.0), "{}: {x} vs {y}", rule.name());
            }
        }
    }
}
