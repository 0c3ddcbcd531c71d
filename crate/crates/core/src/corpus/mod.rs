//! Interaction logs: parsing, preprocessing and temporal splitting.
//!
//! An [`InteractionSet`] owns its records together with dense index maps for
//! users and items. Every preprocessing step returns a fresh set whose maps
//! are rebuilt in first-appearance order, so the canonical serialization
//! (dense integer ids) round-trips exactly.

mod matrix;
mod parse;
mod preprocess;
mod split;

use std::collections::HashMap;
use std::io::Write;

pub use matrix::{BinaryMatrix, EncodedSplit};
pub(crate) use matrix::sorted_intersection_len;
pub use parse::{parse_interactions, read_interactions, Schema, TimeUnit};
pub use preprocess::{
    binarize, dedup_max_weight, event_weight_collapse, event_weights, f_core, f_filter,
    FilterOrder, Threshold,
};
pub use split::{prune_cold, temporal_split, SplitBundle, SplitRatios};

use crate::Result;

#[derive(Clone, Debug, PartialEq)]
pub struct InteractionRecord {
    pub user: String,
    pub item: String,
    pub weight: f64,
    /// Epoch milliseconds.
    pub timestamp: i64,
    pub event: Option<u32>,
}

impl InteractionRecord {
    pub fn new(user: impl Into<String>, item: impl Into<String>, weight: f64, timestamp: i64) -> Self {
        InteractionRecord {
            user: user.into(),
            item: item.into(),
            weight,
            timestamp,
            event: None,
        }
    }

    pub fn with_event(mut self, event: u32) -> Self {
        self.event = Some(event);
        self
    }
}

/// Bijection between opaque string ids and `0..len`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct IdIndex {
    labels: Vec<String>,
    lookup: HashMap<String, u32>,
}

impl IdIndex {
    pub fn insert(&mut self, label: &str) -> u32 {
        if let Some(&idx) = self.lookup.get(label) {
            return idx;
        }
        let idx = self.labels.len() as u32;
        self.labels.push(label.to_owned());
        self.lookup.insert(label.to_owned(), idx);
        idx
    }

    pub fn get(&self, label: &str) -> Option<u32> {
        self.lookup.get(label).copied()
    }

    pub fn label(&self, idx: u32) -> &str {
        &self.labels[idx as usize]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn contains(&self, label: &str) -> bool {
        self.lookup.contains_key(label)
    }
}

/// An ordered collection of interactions with dense user and item indices.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct InteractionSet {
    records: Vec<InteractionRecord>,
    users: IdIndex,
    items: IdIndex,
}

impl InteractionSet {
    pub fn new(records: Vec<InteractionRecord>) -> Self {
        let mut users = IdIndex::default();
        let mut items = IdIndex::default();
        for r in &records {
            users.insert(&r.user);
            items.insert(&r.item);
        }
        InteractionSet {
            records,
            users,
            items,
        }
    }

    pub fn records(&self) -> &[InteractionRecord] {
        &self.records
    }

    pub fn into_records(self) -> Vec<InteractionRecord> {
        self.records
    }

    pub fn users(&self) -> &IdIndex {
        &self.users
    }

    pub fn items(&self) -> &IdIndex {
        &self.items
    }

    pub fn n_users(&self) -> usize {
        self.users.len()
    }

    pub fn n_items(&self) -> usize {
        self.items.len()
    }

    pub fn n_records(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn user_index(&self, record: &InteractionRecord) -> u32 {
        self.users.get(&record.user).expect("record user is indexed")
    }

    pub fn item_index(&self, record: &InteractionRecord) -> u32 {
        self.items.get(&record.item).expect("record item is indexed")
    }

    pub fn has_events(&self) -> bool {
        !self.records.is_empty() && self.records.iter().all(|r| r.event.is_some())
    }

    /// Binary user-item matrix in this set's own index space.
    pub fn to_matrix(&self) -> BinaryMatrix {
        BinaryMatrix::from_pairs(
            self.n_users(),
            self.n_items(),
            self.records
                .iter()
                .map(|r| (self.user_index(r), self.item_index(r))),
        )
    }

    /// Writes the canonical delimited form: header plus one row per record
    /// with dense integer ids.
    pub fn write_canonical<W: Write>(&self, out: W) -> Result<()> {
        let with_events = self.has_events();
        let mut w = csv::Writer::from_writer(out);
        if with_events {
            w.write_record(["user_id", "item_id", "weight", "timestamp", "event"])?;
        } else {
            w.write_record(["user_id", "item_id", "weight", "timestamp"])?;
        }
        for r in &self.records {
            let user = self.user_index(r).to_string();
            let item = self.item_index(r).to_string();
            let weight = crate::io::fmt_f64(r.weight);
            let ts = r.timestamp.to_string();
            match (with_events, r.event) {
                (true, Some(e)) => w.write_record([user, item, weight, ts, e.to_string()])?,
                _ => w.write_record([user, item, weight, ts])?,
            }
        }
        w.flush().map_err(|e| crate::Error::io("<canonical output>", e))?;
        Ok(())
    }

    pub fn to_canonical_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_canonical(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn indices_follow_first_appearance() {
        let set = InteractionSet::new(vec![
            InteractionRecord::new("b", "y", 1.0, 0),
            InteractionRecord::new("a", "x", 1.0, 1),
            InteractionRecord::new("b", "x", 1.0, 2),
        ]);
        assert_eq!(set.users().labels(), ["b", "a"]);
        assert_eq!(set.items().labels(), ["y", "x"]);
        assert_eq!(set.n_records(), 3);
    }

    #[test]
    fn canonical_round_trip() {
        let set = InteractionSet::new(vec![
            InteractionRecord::new("u9", "i3", 4.5, 100),
            InteractionRecord::new("u1", "i3", 0.25, 50),
            InteractionRecord::new("u9", "i7", 1.0, 75),
        ]);
        let text = set.to_canonical_string().unwrap();
        let back = parse_interactions(text.as_bytes(), &Schema::default()).unwrap();
        assert_eq!(back.n_users(), 2);
        assert_eq!(back.n_items(), 2);
        assert_eq!(back.to_canonical_string().unwrap(), text);
        for (a, b) in set.records().iter().zip(back.records()) {
            assert_eq!(a.weight, b.weight);
            assert_eq!(a.timestamp, b.timestamp);
            assert_eq!(set.user_index(a), back.user_index(b));
            assert_eq!(set.item_index(a), back.item_index(b));
        }
    }
}
