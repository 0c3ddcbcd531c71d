use rayon::prelude::*;

use super::{require_nonempty, top_k_unseen, Recommender};
use crate::corpus::BinaryMatrix;
use crate::{Error, Result};

/// Item-based nearest neighbours over binary cosine similarity.
///
/// For each target item only its `neighbors` most similar items are kept;
/// a user's score for item `i` sums `sim(i, j)` over seen items `j` in that
/// neighbourhood.
#[derive(Clone, Debug)]
pub struct ItemKnn {
    data: BinaryMatrix,
    neighbors: usize,
    /// `neighborhoods[i]`: retained `(j, sim(i, j))`, descending similarity.
    neighborhoods: Vec<Vec<(u32, f64)>>,
    /// `contributions[j]`: targets `i` that retain `j`, with `sim(i, j)`.
    contributions: Vec<Vec<(u32, f64)>>,
}

/// Cosine similarities of item `i` to every item, from co-occurrence counts.
fn similarity_row(data: &BinaryMatrix, i: u32, co: &mut [u32]) -> Vec<(u32, f64)> {
    co.iter_mut().for_each(|c| *c = 0);
    for &u in data.col(i) {
        for &j in data.row(u) {
            co[j as usize] += 1;
        }
    }
    let ni = data.col(i).len() as f64;
    let mut out = Vec::new();
    for (j, &c) in co.iter().enumerate() {
        if c > 0 && j as u32 != i {
            let nj = data.col(j as u32).len() as f64;
            out.push((j as u32, f64::from(c) / (ni * nj).sqrt()));
        }
    }
    out
}

pub fn fit_itemknn(train: &BinaryMatrix, neighbors: usize) -> Result<ItemKnn> {
    require_nonempty(train)?;
    fit_itemknn_sorted(train, &sorted_similarities(train), neighbors)
}

/// Every item's similarity row in descending order, ties by item index.
pub(crate) fn sorted_similarities(train: &BinaryMatrix) -> Vec<Vec<(u32, f64)>> {
    let n_items = train.n_items();
    (0..n_items as u32)
        .into_par_iter()
        .map_init(
            || vec![0u32; n_items],
            |co, i| {
                let mut row = similarity_row(train, i, co);
                row.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
                row
            },
        )
        .collect()
}

/// Truncates precomputed sorted rows, so tuning computes similarities once.
pub(crate) fn fit_itemknn_sorted(train: &BinaryMatrix, sorted: &[Vec<(u32, f64)>], neighbors: usize) -> Result<ItemKnn> {
    require_nonempty(train)?;
    if neighbors == 0 {
        return Err(Error::invalid("ItemKNN neighborhood size must be at least 1"));
    }
    let n_items = train.n_items();
    let neighborhoods: Vec<Vec<(u32, f64)>> = sorted.iter().map(|row| row[..row.len().min(neighbors)].to_vec()).collect();
    let mut contributions = vec![Vec::new(); n_items];
    for (i, hood) in neighborhoods.iter().enumerate() {
        for &(j, s) in hood {
            contributions[j as usize].push((i as u32, s));
        }
    }
    Ok(ItemKnn {
        data: train.clone(),
        neighbors,
        neighborhoods,
        contributions,
    })
}

impl ItemKnn {
    pub fn neighbors(&self) -> usize {
        self.neighbors
    }

    pub fn neighborhood(&self, item: u32) -> &[(u32, f64)] {
        &self.neighborhoods[item as usize]
    }

    pub fn scores(&self, user: u32) -> Vec<f64> {
        let mut scores = vec![0.0; self.data.n_items()];
        for &j in self.data.row(user) {
            for &(i, s) in &self.contributions[j as usize] {
                scores[i as usize] += s;
            }
        }
        scores
    }

    /// Full (untruncated) cosine similarity matrix, dense.
    pub fn similarity_matrix(data: &BinaryMatrix) -> Vec<Vec<f64>> {
        let n = data.n_items();
        let mut co = vec![0u32; n];
        (0..n as u32)
            .map(|i| {
                let mut row = vec![0.0; n];
                for (j, s) in similarity_row(data, i, &mut co) {
                    row[j as usize] = s;
                }
                if !data.col(i).is_empty() {
                    row[i as usize] = 1.0;
                }
                row
            })
            .collect()
    }
}

impl Recommender for ItemKnn {
    fn name(&self) -> &'static str {
        "ItemKNN"
    }

    fn fitted_on(&self) -> &BinaryMatrix {
        &self.data
    }

    fn recommend(&self, user: u32, k: usize) -> Vec<u32> {
        top_k_unseen(&self.scores(user), self.data.row(user), k)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_and_disjoint_columns() {
        // Items 0 and 1 share users {0,1}; item 2 belongs to user 2 only.
        let data = BinaryMatrix::from_pairs(3, 3, [(0, 0), (0, 1), (1, 0), (1, 1), (2, 2)]);
        let sim = ItemKnn::similarity_matrix(&data);
        assert_eq!(sim[0][1], 1.0);
        assert_eq!(sim[0][2], 0.0);
        assert_eq!(sim[2][2], 1.0);
    }

    #[test]
    fn empty_item_has_zero_similarity() {
        let data = BinaryMatrix::from_pairs(2, 3, [(0, 0), (1, 1)]);
        let sim = ItemKnn::similarity_matrix(&data);
        assert!(sim[2].iter().all(|&s| s == 0.0));
        let m = fit_itemknn(&data, 5).unwrap();
        assert!(m.scores(0).iter().all(|s| s.is_finite()));
    }

    #[test]
    fn neighborhood_truncation() {
        let data = BinaryMatrix::from_pairs(
            3,
            4,
            [(0, 0), (0, 1), (0, 2), (1, 0), (1, 1), (2, 0), (2, 3)],
        );
        let m = fit_itemknn(&data, 1).unwrap();
        assert_eq!(m.neighborhood(0).len(), 1);
        assert_eq!(m.neighborhood(0)[0].0, 1);
    }
}
