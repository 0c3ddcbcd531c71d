use proptest::prelude::*;

use recbench::characteristics::{characteristics_of_matrix, gini, long_tail, moments, CharacteristicsTable, NAMES};
use recbench::corpus::BinaryMatrix;

/// Gini from the mean absolute difference: Σᵢ Σⱼ |xᵢ − xⱼ| / (2 n² μ).
fn gini_oracle(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mu = x.iter().sum::<f64>() / n;
    let mad: f64 = x.iter().flat_map(|a| x.iter().map(move |b| (a - b).abs())).sum();
    mad / (2.0 * n * n * mu)
}

#[test]
fn hand_computed_dataset() {
    // u0: {0, 1, 2}, u1: {0}, u2: {0, 1}.
    let m = BinaryMatrix::from_pairs(3, 4, [(0, 0), (0, 1), (0, 2), (1, 0), (2, 0), (2, 1)]);
    let c = characteristics_of_matrix(&m).unwrap();
    assert_eq!((c.Nu, c.Ni, c.Nr, c.SpaceSize), (3.0, 4.0, 6.0, 12.0));
    assert_eq!(c.Shape, 0.75);
    assert_eq!(c.Density, 0.5);
    assert_eq!((c.Rpu, c.Rpi), (2.0, 1.5));
    assert!((c.Giniu - gini_oracle(&[3.0, 1.0, 2.0])).abs() < 1e-12);
    assert!((c.Ginii - gini_oracle(&[3.0, 2.0, 1.0, 0.0])).abs() < 1e-12);
    // Item shares 1/2, 1/3, 1/6; profile popularity per user.
    let apb = ((0.5 + 1.0 / 3.0 + 1.0 / 6.0) / 3.0 + 0.5 + (0.5 + 1.0 / 3.0) / 2.0) / 3.0;
    assert!((c.APB - apb).abs() < 1e-12);
}

#[test]
fn tiny_matrices_are_rejected() {
    assert!(characteristics_of_matrix(&BinaryMatrix::from_pairs(1, 3, [(0, 0)])).is_err());
}

#[test]
fn long_tail_is_the_lightest_suffix() {
    let tail = long_tail(&[10.0, 1.0, 5.0, 2.0, 2.0], 0.2);
    assert_eq!(tail, vec![2.0, 1.0]);
    assert!(long_tail(&[5.0, 5.0], 0.2).is_empty());
}

#[test]
fn moments_of_symmetric_sample() {
    let (mean, std, skew, _) = moments(&[1.0, 2.0, 3.0]);
    assert_eq!(mean, 2.0);
    assert!((std - (2.0f64 / 3.0).sqrt()).abs() < 1e-15);
    assert!(skew.abs() < 1e-15);
}

#[test]
fn table_csv_round_trips() {
    let m = BinaryMatrix::from_pairs(3, 3, [(0, 0), (1, 1), (2, 2), (0, 1)]);
    let mut table = CharacteristicsTable::default();
    table.rows.push(("a".into(), characteristics_of_matrix(&m).unwrap()));
    let text = table.to_csv();
    assert!(text.starts_with(&format!("dataset,{}", NAMES.join(","))));
    assert_eq!(CharacteristicsTable::read(text.as_bytes()).unwrap(), table);
}

proptest! {
    #[test]
    fn gini_matches_mean_absolute_difference(x in prop::collection::vec(0.0f64..50.0, 1..30)) {
        prop_assume!(x.iter().sum::<f64>() > 0.0);
        prop_assert!((gini(&x) - gini_oracle(&x)).abs() < 1e-12);
        prop_assert!((0.0..1.0).contains(&gini(&x)));
    }
}
