//! Binarization, event-weight collapsing and activity filters.

use std::collections::{BTreeMap, HashMap};

use super::{InteractionRecord, InteractionSet};
use crate::{Error, Result};

/// Positive-feedback threshold for [`binarize`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Threshold {
    /// Ratings on a 0..5 scale: 3.5.
    Rating,
    /// Weights on a 0..1 scale: 0.3.
    UnitWeight,
    Custom(f64),
}

impl Threshold {
    pub fn value(self) -> f64 {
        match self {
            Threshold::Rating => 3.5,
            Threshold::UnitWeight => 0.3,
            Threshold::Custom(t) => t,
        }
    }
}

/// Drops records with weight below the threshold and sets survivors to 1.0.
pub fn binarize(data: &InteractionSet, threshold: Threshold) -> Result<InteractionSet> {
    let tau = threshold.value();
    if !tau.is_finite() {
        return Err(Error::invalid(format!("threshold must be finite, got {tau}")));
    }
    let kept: Vec<_> = data
        .records()
        .iter()
        .filter(|r| r.weight >= tau)
        .map(|r| InteractionRecord {
            weight: 1.0,
            ..r.clone()
        })
        .collect();
    if kept.is_empty() {
        return Err(Error::AllBelowThreshold(tau));
    }
    Ok(InteractionSet::new(kept))
}

/// Collapses repeated (user, item) pairs to their maximum-weight record.
/// Earlier records win weight ties; output keeps the order of the kept records.
pub fn dedup_max_weight(data: &InteractionSet) -> InteractionSet {
    let mut best: HashMap<(u32, u32), usize> = HashMap::new();
    for (idx, r) in data.records().iter().enumerate() {
        let key = (data.user_index(r), data.item_index(r));
        best.entry(key)
            .and_modify(|cur| {
                if r.weight > data.records()[*cur].weight {
                    *cur = idx;
                }
            })
            .or_insert(idx);
    }
    let mut keep: Vec<usize> = best.into_values().collect();
    keep.sort_unstable();
    InteractionSet::new(keep.into_iter().map(|i| data.records()[i].clone()).collect())
}

/// Per-event-type weights `Nr_total / Nr_e`, adjusted so that a rarer event
/// always weighs strictly more than a more frequent one.
///
/// Returned in order of decreasing frequency (ties by ascending code).
pub fn event_weights(data: &InteractionSet) -> Result<Vec<(u32, f64)>> {
    let mut counts: BTreeMap<u32, usize> = BTreeMap::new();
    for r in data.records() {
        let e = r
            .event
            .ok_or_else(|| Error::invalid("event column absent"))?;
        *counts.entry(e).or_default() += 1;
    }
    if counts.is_empty() {
        return Err(Error::Empty("no interactions".into()));
    }
    let total = data.n_records() as f64;
    let mut by_freq: Vec<(u32, usize)> = counts.into_iter().collect();
    by_freq.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));

    let mut out: Vec<(u32, f64)> = Vec::with_capacity(by_freq.len());
    for (code, n) in by_freq {
        let mut w = total / n as f64;
        if let Some(&(_, prev)) = out.last() {
            if w <= prev {
                w = prev + 1e-9;
            }
        }
        out.push((code, w));
    }
    Ok(out)
}

/// Weights events by rarity and keeps one record per (user, item) pair that
/// carries the weight of the pair's most frequent event type. Count ties go
/// to the higher-weight (rarer) event. The collapsed record takes the latest
/// timestamp of the pair.
pub fn event_weight_collapse(data: &InteractionSet) -> Result<InteractionSet> {
    let weights: HashMap<u32, f64> = event_weights(data)?.into_iter().collect();

    struct Pair {
        first: usize,
        latest: i64,
        counts: BTreeMap<u32, usize>,
    }
    let mut pairs: HashMap<(u32, u32), Pair> = HashMap::new();
    for (idx, r) in data.records().iter().enumerate() {
        let key = (data.user_index(r), data.item_index(r));
        let p = pairs.entry(key).or_insert(Pair {
            first: idx,
            latest: r.timestamp,
            counts: BTreeMap::new(),
        });
        p.latest = p.latest.max(r.timestamp);
        *p.counts.entry(r.event.expect("checked by event_weights")).or_default() += 1;
    }

    let mut collapsed: Vec<(usize, InteractionRecord)> = pairs
        .into_values()
        .map(|p| {
            let (&event, _) = p
                .counts
                .iter()
                .max_by(|a, b| {
                    a.1.cmp(b.1)
                        .then(weights[a.0].total_cmp(&weights[b.0]))
                })
                .expect("pair has at least one event");
            let src = &data.records()[p.first];
            let rec = InteractionRecord {
                user: src.user.clone(),
                item: src.item.clone(),
                weight: weights[&event],
                timestamp: p.latest,
                event: Some(event),
            };
            (p.first, rec)
        })
        .collect();
    collapsed.sort_unstable_by_key(|(first, _)| *first);
    Ok(InteractionSet::new(
        collapsed.into_iter().map(|(_, r)| r).collect(),
    ))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum FilterOrder {
    #[default]
    ItemsThenUsers,
    UsersThenItems,
}

fn counts_by<F: Fn(&InteractionRecord) -> u32>(
    records: &[InteractionRecord],
    keep: &[bool],
    key: F,
) -> HashMap<u32, usize> {
    let mut counts = HashMap::new();
    for (r, &k) in records.iter().zip(keep) {
        if k {
            *counts.entry(key(r)).or_insert(0) += 1;
        }
    }
    counts
}

/// Drops records whose key (user or item) has fewer than `f` live records.
/// Returns whether anything was dropped.
fn drop_sparse<F: Fn(&InteractionRecord) -> u32>(
    records: &[InteractionRecord],
    keep: &mut [bool],
    f: usize,
    key: F,
) -> bool {
    let counts = counts_by(records, keep, &key);
    let mut changed = false;
    for (r, k) in records.iter().zip(keep.iter_mut()) {
        if *k && counts[&key(r)] < f {
            *k = false;
            changed = true;
        }
    }
    changed
}

fn collect_kept(data: &InteractionSet, keep: &[bool]) -> Result<InteractionSet> {
    let records: Vec<_> = data
        .records()
        .iter()
        .zip(keep)
        .filter(|(_, &k)| k)
        .map(|(r, _)| r.clone())
        .collect();
    if records.is_empty() {
        return Err(Error::Empty("filter removed every interaction".into()));
    }
    Ok(InteractionSet::new(records))
}

/// Single-pass activity filter: one item pass and one user pass in `order`.
pub fn f_filter(data: &InteractionSet, f: usize, order: FilterOrder) -> Result<InteractionSet> {
    if f == 0 {
        return Err(Error::invalid("filter level must be at least 1"));
    }
    let records = data.records();
    let mut keep = vec![true; records.len()];
    let by_user = |r: &InteractionRecord| data.user_index(r);
    let by_item = |r: &InteractionRecord| data.item_index(r);
    match order {
        FilterOrder::ItemsThenUsers => {
            drop_sparse(records, &mut keep, f, by_item);
            drop_sparse(records, &mut keep, f, by_user);
        }
        FilterOrder::UsersThenItems => {
            drop_sparse(records, &mut keep, f, by_user);
            drop_sparse(records, &mut keep, f, by_item);
        }
    }
    collect_kept(data, &keep)
}

/// Iterative f-core: alternates item and user passes until nothing changes.
pub fn f_core(data: &InteractionSet, f: usize) -> Result<InteractionSet> {
    if f == 0 {
        return Err(Error::invalid("core level must be at least 1"));
    }
    let records = data.records();
    let mut keep = vec![true; records.len()];
    loop {
        let a = drop_sparse(records, &mut keep, f, |r| data.item_index(r));
        let b = drop_sparse(records, &mut keep, f, |r| data.user_index(r));
        if !a && !b {
            break;
        }
    }
    collect_kept(data, &keep)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(u: &str, i: &str, w: f64) -> InteractionRecord {
        InteractionRecord::new(u, i, w, 0)
    }

    #[test]
    fn rating_threshold() {
        let set = InteractionSet::new(vec![
            rec("a", "x", 5.0),
            rec("a", "y", 4.0),
            rec("b", "x", 3.0),
            rec("b", "y", 2.0),
        ]);
        let out = binarize(&set, Threshold::Rating).unwrap();
        assert_eq!(out.n_records(), 2);
        assert!(out.records().iter().all(|r| r.weight == 1.0));
        assert_eq!(out.n_users(), 1);
    }

    #[test]
    fn unit_weight_threshold_keeps_boundary() {
        let set = InteractionSet::new(vec![rec("a", "x", 0.1), rec("a", "y", 0.3), rec("b", "z", 0.9)]);
        let out = binarize(&set, Threshold::UnitWeight).unwrap();
        let items: Vec<_> = out.records().iter().map(|r| r.item.as_str()).collect();
        assert_eq!(items, ["y", "z"]);
    }

    #[test]
    fn zero_threshold_only_resets_weights() {
        let set = InteractionSet::new(vec![rec("a", "x", 0.5), rec("b", "y", 2.0)]);
        let out = binarize(&set, Threshold::Custom(0.0)).unwrap();
        assert_eq!(out.n_records(), 2);
        assert!(out.records().iter().all(|r| r.weight == 1.0));
    }

    #[test]
    fn all_below_is_error() {
        let set = InteractionSet::new(vec![rec("a", "x", 1.0)]);
        assert!(matches!(
            binarize(&set, Threshold::Rating),
            Err(Error::AllBelowThreshold(_))
        ));
    }

    #[test]
    fn binarize_idempotent() {
        let set = InteractionSet::new(vec![rec("a", "x", 0.5), rec("b", "y", 0.9)]);
        let once = binarize(&set, Threshold::UnitWeight).unwrap();
        let twice = binarize(&once, Threshold::UnitWeight).unwrap();
        assert_eq!(once, twice);
    }

    #[test]
    fn dedup_keeps_max_weight() {
        let set = InteractionSet::new(vec![rec("a", "x", 2.0), rec("a", "x", 5.0), rec("b", "x", 1.0)]);
        let out = dedup_max_weight(&set);
        assert_eq!(out.n_records(), 2);
        assert_eq!(out.records()[0].weight, 5.0);
    }

    fn ev(u: &str, i: &str, e: u32, t: i64) -> InteractionRecord {
        InteractionRecord::new(u, i, 1.0, t).with_event(e)
    }

    #[test]
    fn event_weights_follow_rarity() {
        // 8 views (code 0) and 2 purchases (code 1).
        let mut recs = Vec::new();
        for n in 0..8 {
            recs.push(ev(&format!("u{n}"), "x", 0, n));
        }
        recs.push(ev("u0", "y", 1, 10));
        recs.push(ev("u1", "y", 1, 11));
        let w = event_weights(&InteractionSet::new(recs)).unwrap();
        assert_eq!(w, vec![(0, 1.25), (1, 5.0)]);
    }

    #[test]
    fn collapse_keeps_most_frequent_event() {
        // Global: 6 views, 2 purchases. Pair (a,x): 3 views + 1 purchase.
        let recs = vec![
            ev("a", "x", 0, 1),
            ev("a", "x", 0, 2),
            ev("a", "x", 1, 3),
            ev("a", "x", 0, 4),
            ev("b", "y", 0, 5),
            ev("b", "z", 0, 6),
            ev("c", "z", 0, 7),
            ev("c", "y", 1, 8),
        ];
        let out = event_weight_collapse(&InteractionSet::new(recs)).unwrap();
        let ax = out.records().iter().find(|r| r.user == "a").unwrap();
        assert_eq!(ax.event, Some(0));
        assert_eq!(ax.weight, 8.0 / 6.0);
        assert_eq!(ax.timestamp, 4);
    }

    #[test]
    fn collapse_count_tie_goes_to_rarer_event() {
        let recs = vec![
            ev("a", "x", 0, 1),
            ev("a", "x", 1, 2),
            ev("b", "x", 0, 3),
            ev("c", "x", 0, 4),
        ];
        let out = event_weight_collapse(&InteractionSet::new(recs)).unwrap();
        let ax = out.records().iter().find(|r| r.user == "a").unwrap();
        assert_eq!(ax.event, Some(1));
        assert_eq!(ax.weight, 4.0);
    }

    #[test]
    fn collapse_single_type() {
        let recs = vec![ev("a", "x", 2, 1), ev("a", "x", 2, 2), ev("b", "x", 2, 3)];
        let out = event_weight_collapse(&InteractionSet::new(recs)).unwrap();
        assert_eq!(out.n_records(), 2);
        assert!(out.records().iter().all(|r| r.weight == 1.0));
    }

    #[test]
    fn equal_frequencies_are_separated() {
        let recs = vec![ev("a", "x", 0, 1), ev("b", "x", 1, 2)];
        let w = event_weights(&InteractionSet::new(recs)).unwrap();
        assert_eq!(w[0], (0, 2.0));
        assert!(w[1].1 > w[0].1);
    }

    #[test]
    fn collapse_requires_events() {
        let set = InteractionSet::new(vec![rec("a", "x", 1.0)]);
        assert!(event_weight_collapse(&set).is_err());
    }

    fn grid_user_pattern() -> InteractionSet {
        // u0 has 4 interactions on popular items; others have 5+.
        let mut recs = Vec::new();
        for u in 1..6 {
            for i in 0..6 {
                recs.push(rec(&format!("u{u}"), &format!("i{i}"), 1.0));
            }
        }
        for i in 0..4 {
            recs.push(rec("u0", &format!("i{i}"), 1.0));
        }
        InteractionSet::new(recs)
    }

    #[test]
    fn filter_drops_light_user_keeps_items() {
        let set = grid_user_pattern();
        let out = f_filter(&set, 5, FilterOrder::ItemsThenUsers).unwrap();
        assert!(!out.users().contains("u0"));
        assert_eq!(out.n_items(), 6);
    }

    #[test]
    fn level_one_is_identity() {
        let set = grid_user_pattern();
        assert_eq!(f_filter(&set, 1, FilterOrder::ItemsThenUsers).unwrap(), set);
        assert_eq!(f_core(&set, 1).unwrap(), set);
    }

    #[test]
    fn complete_bipartite_is_a_core() {
        let mut recs = Vec::new();
        for u in 0..5 {
            for i in 0..5 {
                recs.push(rec(&format!("u{u}"), &format!("i{i}"), 1.0));
            }
        }
        let set = InteractionSet::new(recs);
        assert_eq!(f_core(&set, 5).unwrap(), set);
    }

    #[test]
    fn empty_core_is_error() {
        let set = InteractionSet::new(vec![rec("a", "x", 1.0), rec("b", "y", 1.0)]);
        assert!(f_core(&set, 2).is_err());
        assert!(f_filter(&set, 2, FilterOrder::ItemsThenUsers).is_err());
    }
}
