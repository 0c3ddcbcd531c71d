use rand::Rng;

use super::{require_nonempty, Recommender};
use crate::corpus::BinaryMatrix;
use crate::seed::derived_rng;
use crate::Result;

/// Uniform sampling of unseen items; each user draws from its own seeded stream.
#[derive(Clone, Debug)]
pub struct RandomModel {
    data: BinaryMatrix,
    seed: u64,
}

pub fn fit_random(train: &BinaryMatrix, seed: u64) -> Result<RandomModel> {
    require_nonempty(train)?;
    Ok(RandomModel {
        data: train.clone(),
        seed,
    })
}

impl Recommender for RandomModel {
    fn name(&self) -> &'static str {
        "Random"
    }

    fn fitted_on(&self) -> &BinaryMatrix {
        &self.data
    }

    fn recommend(&self, user: u32, k: usize) -> Vec<u32> {
        let seen = self.data.row(user);
        let mut pool: Vec<u32> = (0..self.data.n_items() as u32)
            .filter(|i| seen.binary_search(i).is_err())
            .collect();
        let take = k.min(pool.len());
        let mut rng = derived_rng(self.seed, "random-model", &[u64::from(user)]);
        for j in 0..take {
            let r = rng.random_range(j..pool.len());
            pool.swap(j, r);
        }
        pool.truncate(take);
        pool
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn data() -> BinaryMatrix {
        BinaryMatrix::from_pairs(2, 6, [(0, 0), (0, 1), (1, 0), (1, 1), (1, 2), (1, 3), (1, 4), (1, 5)])
    }

    #[test]
    fn deterministic_per_seed() {
        let a = fit_random(&data(), 9).unwrap();
        let b = fit_random(&data(), 9).unwrap();
        assert_eq!(a.recommend(0, 3), b.recommend(0, 3));
        let lists = a.recommend(0, 4);
        assert_eq!(lists.len(), 4);
        assert!(lists.iter().all(|i| *i >= 2));
    }

    #[test]
    fn user_with_everything_seen_gets_nothing() {
        let m = fit_random(&data(), 1).unwrap();
        assert!(m.recommend(1, 5).is_empty());
    }

    #[test]
    fn top_one_is_uniform() {
        // User 0 has 4 unseen items; across 10k seeds each should lead ~25%.
        let mut counts = [0usize; 6];
        for seed in 0..10_000u64 {
            let m = fit_random(&data(), seed).unwrap();
            counts[m.recommend(0, 1)[0] as usize] += 1;
        }
        for &c in &counts[2..] {
            let share = c as f64 / 10_000.0;
            assert!((share - 0.25).abs() < 0.02, "share {share}");
        }
        // Chi-square with 3 dof; 16.27 is the 0.001 critical value.
        let chi2: f64 = counts[2..]
            .iter()
            .map(|&c| (c as f64 - 2500.0).powi(2) / 2500.0)
            .sum();
        assert!(chi2 < 16.27, "chi2 {chi2}");
    }
}
