use std::collections::BTreeMap;

use proptest::prelude::*;

use recbench::corpus::BinaryMatrix;
use recbench::metrics::{evaluate, user_accuracy, GroundTruth, Metric};
use recbench::models::RecommendationLists;

#[test]
fn short_relevant_set_normalizes_to_one() {
    // Two relevant items, both at the top of a 10-list.
    let recs = [4, 7, 1, 2, 3, 5, 6, 8, 9, 0];
    let acc = user_accuracy(&recs, &[4, 7], 10).unwrap();
    for metric in [Metric::Precision, Metric::Recall, Metric::Map, Metric::Ndcg, Metric::Mrr, Metric::HitRate] {
        assert_eq!(acc.get(metric), Some(1.0), "{metric:?}");
    }
}

#[test]
fn hand_computed_user() {
    // Relevant {1, 3}; hits at positions 2 and 4 of a 4-list.
    let acc = user_accuracy(&[0, 1, 2, 3], &[1, 3], 4).unwrap();
    assert_eq!(acc.get(Metric::Precision), Some(1.0));
    assert_eq!(acc.get(Metric::Mrr), Some(0.5));
    let ap = (1.0 / 2.0 + 2.0 / 4.0) / 2.0;
    assert!((acc.get(Metric::Map).unwrap() - ap).abs() < 1e-15);
    let dcg = 1.0 / 3f64.log2() + 1.0 / 5f64.log2();
    let idcg = 1.0 + 1.0 / 3f64.log2();
    assert!((acc.get(Metric::Ndcg).unwrap() - dcg / idcg).abs() < 1e-15);
}

#[test]
fn empty_relevant_set_is_rejected() {
    assert!(user_accuracy(&[1, 2], &[], 2).is_err());
}

type UserLists = BTreeMap<u32, Vec<u32>>;

/// Relevant sets, recommendation lists and history pairs.
fn instance() -> impl Strategy<Value = (UserLists, UserLists, Vec<(u32, u32)>)> {
    let users = 1u32..12;
    users.prop_flat_map(|n| {
        (
            prop::collection::btree_map(0..n, prop::collection::btree_set(0u32..20, 1..6), 1..=n as usize),
            prop::collection::btree_map(0..n, Just((0u32..20).collect::<Vec<_>>()).prop_shuffle(), 0..=n as usize),
            prop::collection::vec((0..n, 0u32..20), 1..60),
        )
            .prop_map(|(rel, lists, hist)| {
                (
                    rel.into_iter().map(|(u, s)| (u, s.into_iter().collect())).collect(),
                    lists,
                    hist,
                )
            })
    })
}

proptest! {
    #[test]
    fn metrics_in_range_and_coverage_monotone((relevant, lists, hist) in instance()) {
        let n_users = 12;
        let truth = GroundTruth::from_sets(relevant, BinaryMatrix::from_pairs(n_users, 20, hist)).unwrap();
        let recs = RecommendationLists { k: 20, lists };
        let ks = [1, 3, 5, 10, 20];
        let report = evaluate(&recs, &truth, &ks).unwrap();
        for k in ks {
            for metric in Metric::ALL {
                let v = report.get(metric, k).unwrap();
                prop_assert!(v.is_finite() && v >= 0.0, "{metric:?}@{k} = {v}");
                if metric != Metric::Novelty {
                    prop_assert!(v <= 1.0 + 1e-12, "{metric:?}@{k} = {v}");
                }
            }
        }
        for w in ks.windows(2) {
            let (a, b) = (w[0], w[1]);
            prop_assert!(report.get(Metric::Coverage, a) <= report.get(Metric::Coverage, b));
            prop_assert!(report.get(Metric::HitRate, a) <= report.get(Metric::HitRate, b));
            prop_assert!(report.get(Metric::Recall, a) <= report.get(Metric::Recall, b));
        }
    }
}
