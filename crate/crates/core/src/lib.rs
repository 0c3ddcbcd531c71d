//! Offline benchmarking toolkit for top-N recommendation algorithms.
//!
//! The crate covers the whole path from raw interaction logs to a robust
//! leaderboard:
//!
//! * [`corpus`] ingests and preprocesses interaction logs and splits them in time.
//! * [`models`] provides desk-scale baselines (Random, MostPop, ItemKNN, EASE)
//!   and a seeded hyperparameter search.
//! * [`metrics`] computes the nine top-k quality metrics and bootstrap estimates.
//! * [`characteristics`] describes datasets with 18 interaction-matrix statistics.
//! * [`aggregation`] turns a datasets-by-methods metric matrix into leaderboards.
//! * [`stats`] holds correlation measures, significance tests and CD-diagram data.
//! * [`stability`] perturbs benchmark inputs and measures ranking drift.
//! * [`selection`] picks small representative dataset subsets.
//! * [`pipeline`] runs the full benchmark grid from a config file.

pub mod aggregation;
pub mod characteristics;
pub mod corpus;
mod error;
pub mod io;
pub mod matrix;
pub mod metrics;
pub mod models;
pub mod pipeline;
pub mod plot;
pub mod seed;
pub mod selection;
pub mod stability;
pub mod stats;
pub mod synthetic;

pub use error::{Error, Result};
pub use matrix::MetricMatrix;
