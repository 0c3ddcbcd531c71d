use nalgebra::DMatrix;
use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use super::{pca, standardize, FeatureTable, SelectionResult};
use crate::seed::derived_rng;
use crate::{Error, Result};

pub const DEFAULT_DESIGN_RESTARTS: usize = 5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum DesignCriterion {
    /// Minimize `tr((XᵀX)⁻¹) / 3`.
    A,
    /// Maximize `log det(XᵀX)`.
    D,
}

impl DesignCriterion {
    pub fn label(self) -> &'static str {
        match self {
            DesignCriterion::A => "A optimal",
            DesignCriterion::D => "D optimal",
        }
    }
}

fn gram(x: &DMatrix<f64>) -> DMatrix<f64> {
    x.transpose() * x
}

/// `tr((XᵀX)⁻¹) / 3`; infinite when the Gram matrix is singular.
pub fn a_criterion(x: &DMatrix<f64>) -> f64 {
    match gram(x).cholesky() {
        Some(ch) => {
            let inv = ch.inverse();
            let tr = inv.trace();
            if tr.is_finite() && tr > 0.0 {
                tr / 3.0
            } else {
                f64::INFINITY
            }
        }
        None => f64::INFINITY,
    }
}

/// `log det(XᵀX)`; negative infinity when singular.
pub fn d_criterion(x: &DMatrix<f64>) -> f64 {
    match gram(x).cholesky() {
        Some(ch) => {
            let l = ch.l();
            let logdet = 2.0 * l.diagonal().iter().map(|v| v.ln()).sum::<f64>();
            if logdet.is_finite() {
                logdet
            } else {
                f64::NEG_INFINITY
            }
        }
        None => f64::NEG_INFINITY,
    }
}

/// Objective to minimize.
fn loss(design: &DMatrix<f64>, rows: &[usize], criterion: DesignCriterion) -> f64 {
    let x = design.select_rows(rows);
    match criterion {
        DesignCriterion::A => a_criterion(&x),
        DesignCriterion::D => -d_criterion(&x),
    }
}

/// Swap-only local search from `restarts` random subsets of the rows of
/// `design`. Each step scans positions and candidates in index order and
/// takes the first improving swap. Returns the best subset (ascending) and
/// its criterion value, plus the objective trace of accepted moves.
pub fn greedy_design(
    design: &DMatrix<f64>,
    target_count: usize,
    criterion: DesignCriterion,
    restarts: usize,
    seed: u64,
) -> Result<(Vec<usize>, f64, Vec<f64>)> {
    let n = design.nrows();
    if target_count == 0 || target_count > n {
        return Err(Error::invalid(format!("target count must lie in 1..={n}")));
    }
    let mut best: Option<(Vec<usize>, f64, Vec<f64>)> = None;
    for r in 0..restarts.max(1) {
        let mut rng = derived_rng(seed, "design-restart", &[r as u64]);
        let mut subset = sample(&mut rng, n, target_count).into_vec();
        subset.sort_unstable();
        let mut current = loss(design, &subset, criterion);
        let mut trace = vec![current];
        loop {
            let mut improved = false;
            'scan: for pos in 0..target_count {
                for cand in 0..n {
                    if subset.contains(&cand) {
                        continue;
                    }
                    let mut trial = subset.clone();
                    trial[pos] = cand;
                    let value = loss(design, &trial, criterion);
                    let gain = if current.is_infinite() {
                        value.is_finite()
                    } else {
                        value < current - 1e-12 * current.abs().max(1.0)
                    };
                    if gain {
                        subset = trial;
                        current = value;
                        trace.push(value);
                        improved = true;
                        break 'scan;
                    }
                }
            }
            if !improved {
                break;
            }
        }
        subset.sort_unstable();
        if best.as_ref().is_none_or(|b| current < b.1) {
            best = Some((subset, current, trace));
        }
    }
    let (subset, value, trace) = best.expect("at least one restart");
    if value.is_infinite() {
        return Err(Error::degenerate("every candidate subset has a singular information matrix"));
    }
    let reported = match criterion {
        DesignCriterion::A => value,
        DesignCriterion::D => -value,
    };
    Ok((subset, reported, trace))
}

/// Standardizes and PCA-reduces the features, keeps at most
/// `target_count − 1` components, appends an intercept column and runs the
/// greedy search.
pub fn optimal_design_select(
    f: &FeatureTable,
    target_count: usize,
    criterion: DesignCriterion,
    restarts: usize,
    seed: u64,
    variance_target: f64,
) -> Result<SelectionResult> {
    let n = f.n_rows();
    if target_count < 2 || target_count > n {
        return Err(Error::invalid(format!("target count must lie in 2..={n}")));
    }
    let reduced = pca(&standardize(f)?, variance_target)?.table;
    let p = reduced.n_cols().min(target_count - 1);
    let design = DMatrix::from_fn(n, p + 1, |r, c| if c == p { 1.0 } else { reduced.values[r][c] });
    let (idx, value, _) = greedy_design(&design, target_count, criterion, restarts, seed)?;
    let mut out = SelectionResult::plain(criterion.label(), idx, &f.rows);
    out.criterion_name = Some(match criterion {
        DesignCriterion::A => "tr((XᵀX)⁻¹)/3".into(),
        DesignCriterion::D => "log det(XᵀX)".into(),
    });
    out.criterion = Some(value);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_design() {
        let x = DMatrix::<f64>::identity(2, 2);
        assert!((a_criterion(&x) - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(d_criterion(&x), 0.0);
        assert_eq!(a_criterion(&DMatrix::zeros(2, 2)), f64::INFINITY);
    }

    #[test]
    fn d_optimal_takes_the_spread() {
        let x = DMatrix::from_row_slice(3, 2, &[1.0, 1.0, 2.0, 1.0, 10.0, 1.0]);
        let (idx, _, trace) = greedy_design(&x, 2, DesignCriterion::D, 3, 0).unwrap();
        assert_eq!(idx, vec![0, 2]);
        assert!(trace.windows(2).all(|w| w[1] <= w[0]));
    }
}
