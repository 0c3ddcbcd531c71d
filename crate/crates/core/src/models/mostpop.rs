use super::{require_nonempty, Recommender};
use crate::corpus::BinaryMatrix;
use crate::Result;

/// Global popularity ranking with seen items filtered out per user.
#[derive(Clone, Debug)]
pub struct MostPop {
    data: BinaryMatrix,
    ranking: Vec<u32>,
}

pub fn fit_mostpop(train: &BinaryMatrix) -> Result<MostPop> {
    require_nonempty(train)?;
    let counts = train.item_counts();
    let mut ranking: Vec<u32> = (0..train.n_items() as u32).collect();
    ranking.sort_by(|&a, &b| counts[b as usize].cmp(&counts[a as usize]).then(a.cmp(&b)));
    Ok(MostPop {
        data: train.clone(),
        ranking,
    })
}

impl MostPop {
    pub fn ranking(&self) -> &[u32] {
        &self.ranking
    }
}

impl Recommender for MostPop {
    fn name(&self) -> &'static str {
        "MostPop"
    }

    fn fitted_on(&self) -> &BinaryMatrix {
        &self.data
    }

    fn recommend(&self, user: u32, k: usize) -> Vec<u32> {
        let seen = self.data.row(user);
        self.ranking
            .iter()
            .copied()
            .filter(|i| seen.binary_search(i).is_err())
            .take(k)
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orders_by_count_and_filters_seen() {
        // Counts x(0):5, y(1):3, z(2):1; user 0 saw y.
        let mut pairs = vec![(0, 1)];
        pairs.extend((1..6).map(|u| (u, 0)));
        pairs.extend((1..3).map(|u| (u, 1)));
        pairs.push((1, 2));
        let m = fit_mostpop(&BinaryMatrix::from_pairs(6, 3, pairs)).unwrap();
        assert_eq!(m.recommend(0, 2), vec![0, 2]);
    }

    #[test]
    fn equal_counts_use_index_order() {
        let m = fit_mostpop(&BinaryMatrix::from_pairs(3, 3, [(0, 2), (1, 1), (2, 0)])).unwrap();
        assert_eq!(m.ranking(), [0, 1, 2]);
    }
}
