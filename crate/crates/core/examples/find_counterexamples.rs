//! Searches random metric matrices for leaderboard flips under method
//! injection and writes them as JSON fixtures.
//!
//! `cargo run --release -p recbench-core --example find_counterexamples -- <out.json>`

use recbench::aggregation::{AggregationOptions, Rule};
use recbench::stability::{search_counterexample, PerturbationKind, RandomMatrixSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "crates/core/tests/fixtures/counterexamples.json".into());
    let opts = AggregationOptions::default();
    let mut cases = vec![
        (Rule::MeanRanks, PerturbationKind::AddSimilar { alpha: 1.0 }),
        (Rule::Copeland, PerturbationKind::AddSimilar { alpha: 1.0 }),
        (Rule::DmAuc, PerturbationKind::AddBest { alpha: 4.0 }),
    ];
    for alpha in [1.0, 2.0, 3.0, 4.0] {
        cases.push((Rule::Minimax, PerturbationKind::AddBest { alpha }));
    }
    let mut found = Vec::new();
    for (n, (rule, perturbation)) in cases.into_iter().enumerate() {
        match search_counterexample(rule, perturbation, &opts, RandomMatrixSpec::default(), 10_000, n as u64)? {
            Some(c) => {
                println!("{} {:?}: attempt {}, spearman {:.3}", rule.name(), perturbation, c.attempt, c.spearman);
                found.push(c);
            }
            None => println!("{} {:?}: none found", rule.name(), perturbation),
        }
    }
    std::fs::create_dir_all(std::path::Path::new(&out).parent().unwrap_or(std::path::Path::new(".")))?;
    std::fs::write(&out, serde_json::to_string_pretty(&found)? + "\n")?;
    println!("wrote {out}");
    Ok(())
}
