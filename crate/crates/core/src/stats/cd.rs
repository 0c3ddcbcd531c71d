use serde::{Deserialize, Serialize};

use super::PairwiseTestReport;
use crate::aggregation::{mean_ranks, rank_rows};
use crate::matrix::MetricMatrix;
use crate::{Error, Result};

/// Bayesian pairs whose larger directional posterior is below this are
/// treated as not significantly different.
pub const BAYES_SIGNIFICANCE: f64 = 0.85;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CdDiagramData {
    /// Methods ordered by ascending mean rank (best first).
    pub methods: Vec<String>,
    pub mean_ranks: Vec<f64>,
    pub wilcoxon_cliques: Vec<Vec<String>>,
    pub bayesian_cliques: Option<Vec<Vec<String>>>,
}

/// Maximal cliques (size ≥ 2) of an undirected graph given as an adjacency
/// matrix. Members are sorted; cliques are returned in lexicographic order.
pub fn maximal_cliques(adj: &[Vec<bool>]) -> Vec<Vec<usize>> {
    fn expand(adj: &[Vec<bool>], r: &mut Vec<usize>, p: Vec<usize>, x: Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if p.is_empty() && x.is_empty() {
            if r.len() >= 2 {
                let mut c = r.clone();
                c.sort_unstable();
                out.push(c);
            }
            return;
        }
        let pivot = p
            .iter()
            .chain(&x)
            .copied()
            .max_by_key(|&u| p.iter().filter(|&&v| adj[u][v]).count())
            .expect("p or x non-empty");
        let candidates: Vec<usize> = p.iter().copied().filter(|&v| !adj[pivot][v]).collect();
        let (mut p, mut x) = (p, x);
        for v in candidates {
            r.push(v);
            let np = p.iter().copied().filter(|&u| adj[v][u]).collect();
            let nx = x.iter().copied().filter(|&u| adj[v][u]).collect();
            expand(adj, r, np, nx, out);
            r.pop();
            p.retain(|&u| u != v);
            x.push(v);
        }
    }
    let n = adj.len();
    let mut out = Vec::new();
    expand(adj, &mut Vec::new(), (0..n).collect(), Vec::new(), &mut out);
    out.sort();
    out
}

fn cliques_by_rank(adj: &[Vec<bool>], order: &[usize], labels: &[String]) -> Vec<Vec<String>> {
    // Relabel vertices by rank position so cliques list best methods first.
    let n = order.len();
    let ranked: Vec<Vec<bool>> = (0..n)
        .map(|a| (0..n).map(|b| adj[order[a]][order[b]]).collect())
        .collect();
    maximal_cliques(&ranked)
        .into_iter()
        .map(|c| c.into_iter().map(|v| labels[order[v]].clone()).collect())
        .collect()
}

/// Orders methods by mean rank and finds the non-significance cliques of
/// each test kind present in `tests`.
pub fn cd_diagram_data(q: &MetricMatrix, tests: &PairwiseTestReport) -> Result<CdDiagramData> {
    if tests.methods != q.methods() {
        return Err(Error::invalid("tests were computed on different methods"));
    }
    let board = mean_ranks(&rank_rows(q));
    let m = q.n_methods();
    let order: Vec<usize> = board
        .entries
        .iter()
        .map(|e| q.method_index(&e.method).expect("leaderboard lists known methods"))
        .collect();
    let wil: Vec<Vec<bool>> = (0..m)
        .map(|a| (0..m).map(|b| a != b && !tests.wilcoxon_significant(a, b)).collect())
        .collect();
    let bayesian_cliques = tests.bayesian.as_ref().map(|grid| {
        let adj: Vec<Vec<bool>> = (0..m)
            .map(|a| {
                (0..m)
                    .map(|b| a != b && grid[a][b].max_directional() < BAYES_SIGNIFICANCE)
                    .collect()
            })
            .collect();
        cliques_by_rank(&adj, &order, q.methods())
    });
    Ok(CdDiagramData {
        methods: board.entries.iter().map(|e| e.method.clone()).collect(),
        mean_ranks: board.entries.iter().map(|e| e.score).collect(),
        wilcoxon_cliques: cliques_by_rank(&wil, &order, q.methods()),
        bayesian_cliques,
    })
}
