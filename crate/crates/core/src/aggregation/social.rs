use serde::{Deserialize, Serialize};

use super::{Direction, Leaderboard, Rule};
use crate::matrix::MetricMatrix;
use crate::{Error, Result};

/// `wins[a][b]` = number of datasets where method a has a strictly higher
/// metric than method b.
pub fn pairwise_wins(q: &MetricMatrix) -> Vec<Vec<usize>> {
    let m = q.n_methods();
    let mut wins = vec![vec![0; m]; m];
    for row in q.rows() {
        for a in 0..m {
            for b in 0..m {
                if row[a] > row[b] {
                    wins[a][b] += 1;
                }
            }
        }
    }
    wins
}

/// Copeland score `|beaten by A| − |beating A|` under the majority
/// relation; higher is better.
pub fn copeland(q: &MetricMatrix) -> Leaderboard {
    let wins = pairwise_wins(q);
    let m = wins.len();
    let scores: Vec<f64> = (0..m)
        .map(|a| {
            (0..m)
                .map(|b| match wins[a][b].cmp(&wins[b][a]) {
                    std::cmp::Ordering::Greater => 1.0,
                    std::cmp::Ordering::Less => -1.0,
                    std::cmp::Ordering::Equal => 0.0,
                })
                .sum()
        })
        .collect();
    Leaderboard::new(Rule::Copeland.name(), Direction::HigherBetter, q.methods(), &scores)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MinimaxVariant {
    /// Only majority defeats count: `s'(B, A) = wins[B][A]` if B majority-beats A, else 0.
    #[default]
    WinningVotes,
    /// `s(B, A) = wins[B][A]` for every opponent.
    LiteralCount,
}

/// Minimax score `−max_B s(B, A)`; higher is better.
pub fn minimax(q: &MetricMatrix, variant: MinimaxVariant) -> Result<Leaderboard> {
    let m = q.n_methods();
    if m < 2 {
        return Err(Error::invalid("minimax needs at least two methods"));
    }
    let wins = pairwise_wins(q);
    let scores: Vec<f64> = (0..m)
        .map(|a| {
            let worst = (0..m)
                .filter(|&b| b != a)
                .map(|b| match variant {
                    MinimaxVariant::WinningVotes if wins[b][a] <= wins[a][b] => 0,
                    _ => wins[b][a],
                })
                .max()
                .unwrap_or(0);
            -(worst as f64)
        })
        .collect();
    Ok(Leaderboard::new(Rule::Minimax.name(), Direction::HigherBetter, q.methods(), &scores))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn copeland_chain() {
        // m0 beats m1 and m2 everywhere, m1 beats m2.
        let q = MetricMatrix::from_rows(vec![vec![0.9, 0.5, 0.1], vec![0.8, 0.6, 0.2]]).unwrap();
        let b = copeland(&q);
        assert_eq!(b.score("m0"), Some(2.0));
        assert_eq!(b.score("m1"), Some(0.0));
        assert_eq!(b.score("m2"), Some(-2.0));
    }

    #[test]
    fn minimax_hand_counts() {
        // A beats B on 2 of 3 datasets, C beats B on all 3.
        let q = MetricMatrix::from_rows(vec![
            vec![0.5, 0.4, 0.9],
            vec![0.5, 0.3, 0.8],
            vec![0.1, 0.2, 0.7],
        ])
        .unwrap();
        let b = minimax(&q, MinimaxVariant::WinningVotes).unwrap();
        assert_eq!(b.score("m1"), Some(-3.0));
        assert_eq!(b.score("m2"), Some(0.0));
    }

    #[test]
    fn identical_methods_score_zero() {
        let q = MetricMatrix::from_rows(vec![vec![0.3, 0.3], vec![0.1, 0.1]]).unwrap();
        let b = minimax(&q, MinimaxVariant::WinningVotes).unwrap();
        assert_eq!(b.score("m0"), Some(0.0));
        assert_eq!(b.score("m1"), Some(0.0));
        assert_eq!(copeland(&q).score("m0"), Some(0.0));
    }
}
