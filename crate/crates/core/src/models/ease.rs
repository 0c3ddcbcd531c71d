use nalgebra::DMatrix;

use super::{require_nonempty, top_k_unseen, Recommender};
use crate::corpus::BinaryMatrix;
use crate::{Error, Result};

/// Largest catalog solved densely by default.
pub const DEFAULT_EASE_ITEM_CAP: usize = 20_000;

/// Closed-form shallow autoencoder: `B = I - P · diag(1 / diag(P))` with
/// `P = (XᵀX + λI)⁻¹`, diagonal forced to zero.
#[derive(Clone, Debug)]
pub struct Ease {
    data: BinaryMatrix,
    lambda: f64,
    /// `Bᵀ`, so that row `j` of `B` is a contiguous column.
    weights_t: DMatrix<f64>,
}

/// `XᵀX` of a binary matrix.
pub fn gram(data: &BinaryMatrix) -> DMatrix<f64> {
    let n = data.n_items();
    let mut g = DMatrix::<f64>::zeros(n, n);
    for u in 0..data.n_users() as u32 {
        let row = data.row(u);
        for &a in row {
            for &b in row {
                g[(a as usize, b as usize)] += 1.0;
            }
        }
    }
    g
}

pub fn fit_ease(train: &BinaryMatrix, lambda: f64, item_cap: usize) -> Result<Ease> {
    require_nonempty(train)?;
    if train.n_items() > item_cap {
        return Err(Error::invalid(format!(
            "EASE dense solve limited to {item_cap} items, got {}; score this dataset externally",
            train.n_items()
        )));
    }
    fit_ease_with_gram(train, &gram(train), lambda)
}

/// Fits from a precomputed `XᵀX`, so a tuner can reuse it across λ values.
pub(crate) fn fit_ease_with_gram(train: &BinaryMatrix, gram: &DMatrix<f64>, lambda: f64) -> Result<Ease> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::invalid(format!("EASE lambda must be positive, got {lambda}")));
    }
    let mut g = gram.clone();
    for d in 0..g.nrows() {
        g[(d, d)] += lambda;
    }
    let p = g
        .cholesky()
        .ok_or_else(|| Error::Numerical("XᵀX + λI is not positive definite".into()))?
        .inverse();
    Ok(from_inverse(train, p, lambda))
}

/// Eigendecomposition of `XᵀX`, shared by every λ of a tuning run.
pub(crate) struct GramBasis {
    vectors: DMatrix<f64>,
    values: Vec<f64>,
}

pub(crate) fn gram_basis(gram: &DMatrix<f64>) -> GramBasis {
    let eig = gram.clone().symmetric_eigen();
    GramBasis {
        values: eig.eigenvalues.iter().map(|&v| v.max(0.0)).collect(),
        vectors: eig.eigenvectors,
    }
}

/// `(XᵀX + λI)⁻¹ = V diag(1 / (σ + λ)) Vᵀ`, two matrix products per λ.
pub(crate) fn fit_ease_with_basis(train: &BinaryMatrix, basis: &GramBasis, lambda: f64) -> Result<Ease> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::invalid(format!("EASE lambda must be positive, got {lambda}")));
    }
    let mut scaled = basis.vectors.clone();
    for (j, &v) in basis.values.iter().enumerate() {
        scaled.column_mut(j).scale_mut(1.0 / (v + lambda));
    }
    let p = &scaled * basis.vectors.transpose();
    Ok(from_inverse(train, p, lambda))
}

fn from_inverse(train: &BinaryMatrix, p: DMatrix<f64>, lambda: f64) -> Ease {
    // B[i][j] = -P[i][j] / P[j][j]; P is symmetric, so Bᵀ[j][i] = -P[j][i] / P[j][j].
    let n = p.nrows();
    let diag: Vec<f64> = (0..n).map(|j| p[(j, j)]).collect();
    let mut bt = p;
    for i in 0..n {
        let mut col = bt.column_mut(i);
        for j in 0..n {
            col[j] = if i == j { 0.0 } else { -col[j] / diag[j] };
        }
    }
    Ease {
        data: train.clone(),
        lambda,
        weights_t: bt,
    }
}

impl Ease {
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Item-item weight matrix `B`.
    pub fn weights(&self) -> DMatrix<f64> {
        self.weights_t.transpose()
    }

    /// Scores for an arbitrary binary row given as sorted item indices:
    /// the sum of the rows of `B` indexed by the row's items.
    pub fn scores_for_row(&self, row: &[u32]) -> Vec<f64> {
        let mut scores = vec![0.0; self.weights_t.nrows()];
        for &j in row {
            for (s, w) in scores.iter_mut().zip(self.weights_t.column(j as usize).iter()) {
                *s += w;
            }
        }
        scores
    }

    pub fn scores(&self, user: u32) -> Vec<f64> {
        self.scores_for_row(self.data.row(user))
    }
}

impl Recommender for Ease {
    fn name(&self) -> &'static str {
        "EASE"
    }

    fn fitted_on(&self) -> &BinaryMatrix {
        &self.data
    }

    fn recommend(&self, user: u32, k: usize) -> Vec<u32> {
        top_k_unseen(&self.scores(user), self.data.row(user), k)
    }
}
