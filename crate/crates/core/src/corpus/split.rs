//! Global temporal split and cold-start pruning.

use std::collections::HashSet;

use super::{InteractionRecord, InteractionSet};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SplitRatios {
    pub train: f64,
    pub validation: f64,
    pub test: f64,
}

impl Default for SplitRatios {
    fn default() -> Self {
        SplitRatios {
            train: 0.8,
            validation: 0.1,
            test: 0.1,
        }
    }
}

impl SplitRatios {
    pub fn new(train: f64, validation: f64, test: f64) -> Result<Self> {
        let r = SplitRatios {
            train,
            validation,
            test,
        };
        r.validate()?;
        Ok(r)
    }

    fn validate(&self) -> Result<()> {
        let parts = [self.train, self.validation, self.test];
        if parts.iter().any(|p| !p.is_finite() || *p <= 0.0) {
            return Err(Error::invalid(format!("split ratios must be positive: {parts:?}")));
        }
        if (parts.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(format!("split ratios must sum to 1: {parts:?}")));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SplitBundle {
    pub train: InteractionSet,
    pub validation: InteractionSet,
    pub test: InteractionSet,
    /// Smallest validation timestamp.
    pub t_val: i64,
    /// Smallest test timestamp.
    pub t_test: i64,
}

/// Splits by one global time boundary per cut. Cuts sit at the ratio
/// quantiles of the time-ordered records; records sharing the boundary
/// timestamp stay in the earlier part.
pub fn temporal_split(data: &InteractionSet, ratios: SplitRatios) -> Result<SplitBundle> {
    ratios.validate()?;
    let mut order: Vec<&InteractionRecord> = data.records().iter().collect();
    order.sort_by_key(|r| r.timestamp);
    let n = order.len();
    if n == 0 {
        return Err(Error::Empty("cannot split an empty set".into()));
    }
    let cut1 = ((n as f64 * ratios.train).round() as usize).min(n);
    let cut2 = ((n as f64 * (ratios.train + ratios.validation)).round() as usize).min(n);
    if cut1 == 0 {
        return Err(Error::degenerate("train split is empty"));
    }
    let b1 = order[cut1 - 1].timestamp;
    let b2 = if cut2 > 0 { order[cut2 - 1].timestamp } else { b1 };

    let part = |lo: Option<i64>, hi: Option<i64>| -> Vec<InteractionRecord> {
        order
            .iter()
            .filter(|r| lo.is_none_or(|l| r.timestamp > l) && hi.is_none_or(|h| r.timestamp <= h))
            .map(|r| (*r).clone())
            .collect()
    };
    let train = part(None, Some(b1));
    let validation = if b2 > b1 { part(Some(b1), Some(b2)) } else { Vec::new() };
    let test = part(Some(b1.max(b2)), None);
    for (name, p) in [("train", &train), ("validation", &validation), ("test", &test)] {
        if p.is_empty() {
            return Err(Error::degenerate(format!(
                "{name} split is empty (timestamps too concentrated for the requested ratios)"
            )));
        }
    }
    let t_val = validation[0].timestamp;
    let t_test = test[0].timestamp;
    Ok(SplitBundle {
        train: InteractionSet::new(train),
        validation: InteractionSet::new(validation),
        test: InteractionSet::new(test),
        t_val,
        t_test,
    })
}

/// Removes validation and test records whose user or item never occurs in train.
pub fn prune_cold(bundle: &SplitBundle) -> Result<SplitBundle> {
    let users: HashSet<&str> = bundle.train.users().labels().iter().map(String::as_str).collect();
    let items: HashSet<&str> = bundle.train.items().labels().iter().map(String::as_str).collect();
    let warm = |set: &InteractionSet| -> Vec<InteractionRecord> {
        set.records()
            .iter()
            .filter(|r| users.contains(r.user.as_str()) && items.contains(r.item.as_str()))
            .cloned()
            .collect()
    };
    let validation = warm(&bundle.validation);
    let test = warm(&bundle.test);
    if test.is_empty() {
        return Err(Error::Empty("no warm test interactions after cold-start pruning".into()));
    }
    if validation.is_empty() {
        log::warn!("validation split is empty after cold-start pruning");
    }
    Ok(SplitBundle {
        train: bundle.train.clone(),
        t_val: validation.first().map_or(bundle.t_val, |r| r.timestamp),
        t_test: test[0].timestamp,
        validation: InteractionSet::new(validation),
        test: InteractionSet::new(test),
    })
}
