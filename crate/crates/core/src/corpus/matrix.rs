use super::{IdIndex, InteractionSet, SplitBundle};
use crate::{Error, Result};

/// Binary user-item incidence matrix stored both row- and column-wise.
/// Row and column lists are sorted and duplicate-free.
#[derive(Clone, Debug, PartialEq)]
pub struct BinaryMatrix {
    rows: Vec<Vec<u32>>,
    cols: Vec<Vec<u32>>,
    nnz: usize,
}

impl BinaryMatrix {
    pub fn from_pairs<I: IntoIterator<Item = (u32, u32)>>(n_users: usize, n_items: usize, pairs: I) -> Self {
        let mut rows = vec![Vec::new(); n_users];
        for (u, i) in pairs {
            assert!((i as usize) < n_items, "item {i} out of range {n_items}");
            rows[u as usize].push(i);
        }
        for r in &mut rows {
            r.sort_unstable();
            r.dedup();
        }
        let mut cols = vec![Vec::new(); n_items];
        for (u, r) in rows.iter().enumerate() {
            for &i in r {
                cols[i as usize].push(u as u32);
            }
        }
        let nnz = rows.iter().map(Vec::len).sum();
        BinaryMatrix { rows, cols, nnz }
    }

    pub fn n_users(&self) -> usize {
        self.rows.len()
    }

    pub fn n_items(&self) -> usize {
        self.cols.len()
    }

    pub fn nnz(&self) -> usize {
        self.nnz
    }

    /// Items of user `u`, ascending.
    pub fn row(&self, u: u32) -> &[u32] {
        &self.rows[u as usize]
    }

    /// Users of item `i`, ascending.
    pub fn col(&self, i: u32) -> &[u32] {
        &self.cols[i as usize]
    }

    pub fn contains(&self, u: u32, i: u32) -> bool {
        self.rows[u as usize].binary_search(&i).is_ok()
    }

    pub fn item_counts(&self) -> Vec<usize> {
        self.cols.iter().map(Vec::len).collect()
    }

    pub fn user_counts(&self) -> Vec<usize> {
        self.rows.iter().map(Vec::len).collect()
    }

    /// Users with at least one interaction.
    pub fn active_users(&self) -> usize {
        self.rows.iter().filter(|r| !r.is_empty()).count()
    }

    /// Element-wise OR with a matrix of the same shape.
    pub fn union(&self, other: &BinaryMatrix) -> BinaryMatrix {
        assert_eq!(self.n_users(), other.n_users());
        assert_eq!(self.n_items(), other.n_items());
        let pairs = self
            .rows
            .iter()
            .chain(other.rows.iter())
            .enumerate()
            .flat_map(|(idx, r)| {
                let u = (idx % self.n_users()) as u32;
                r.iter().map(move |&i| (u, i))
            });
        BinaryMatrix::from_pairs(self.n_users(), self.n_items(), pairs)
    }

    /// Cosine similarity of two item columns: |U(i) ∩ U(j)| / sqrt(|U(i)| |U(j)|).
    /// Zero when either column is empty.
    pub fn item_cosine(&self, i: u32, j: u32) -> f64 {
        let a = self.col(i);
        let b = self.col(j);
        if a.is_empty() || b.is_empty() {
            return 0.0;
        }
        let common = sorted_intersection_len(a, b);
        common as f64 / ((a.len() * b.len()) as f64).sqrt()
    }
}

pub(crate) fn sorted_intersection_len(a: &[u32], b: &[u32]) -> usize {
    let (mut x, mut y, mut n) = (0, 0, 0);
    while x < a.len() && y < b.len() {
        match a[x].cmp(&b[y]) {
            std::cmp::Ordering::Less => x += 1,
            std::cmp::Ordering::Greater => y += 1,
            std::cmp::Ordering::Equal => {
                n += 1;
                x += 1;
                y += 1;
            }
        }
    }
    n
}

/// A split mapped into the train index space.
#[derive(Clone, Debug)]
pub struct EncodedSplit {
    pub users: IdIndex,
    pub items: IdIndex,
    pub train: BinaryMatrix,
    pub validation: BinaryMatrix,
    pub test: BinaryMatrix,
}

impl EncodedSplit {
    /// Train plus validation, the fitting data for the final model.
    pub fn train_validation(&self) -> BinaryMatrix {
        self.train.union(&self.validation)
    }
}

fn encode_set(set: &InteractionSet, users: &IdIndex, items: &IdIndex, what: &str) -> Result<BinaryMatrix> {
    let mut pairs = Vec::with_capacity(set.n_records());
    for r in set.records() {
        let (Some(u), Some(i)) = (users.get(&r.user), items.get(&r.item)) else {
            return Err(Error::invalid(format!(
                "{what} contains cold user or item ({}, {}); prune the split first",
                r.user, r.item
            )));
        };
        pairs.push((u, i));
    }
    Ok(BinaryMatrix::from_pairs(users.len(), items.len(), pairs))
}

impl SplitBundle {
    /// Maps all three parts into the train index. Fails on cold ids.
    pub fn encode(&self) -> Result<EncodedSplit> {
        let users = self.train.users().clone();
        let items = self.train.items().clone();
        Ok(EncodedSplit {
            train: encode_set(&self.train, &users, &items, "train")?,
            validation: encode_set(&self.validation, &users, &items, "validation")?,
            test: encode_set(&self.test, &users, &items, "test")?,
            users,
            items,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rows_and_cols_agree() {
        let m = BinaryMatrix::from_pairs(3, 3, [(0, 2), (0, 1), (2, 1), (0, 1)]);
        assert_eq!(m.row(0), [1, 2]);
        assert_eq!(m.col(1), [0, 2]);
        assert_eq!(m.nnz(), 3);
        assert_eq!(m.active_users(), 2);
        assert!(m.contains(2, 1));
        assert!(!m.contains(1, 1));
    }

    #[test]
    fn cosine_edge_cases() {
        let m = BinaryMatrix::from_pairs(3, 4, [(0, 0), (1, 0), (0, 1), (1, 1), (2, 2)]);
        assert_eq!(m.item_cosine(0, 1), 1.0);
        assert_eq!(m.item_cosine(0, 2), 0.0);
        assert_eq!(m.item_cosine(0, 3), 0.0);
    }

    #[test]
    fn union_merges() {
        let a = BinaryMatrix::from_pairs(2, 2, [(0, 0)]);
        let b = BinaryMatrix::from_pairs(2, 2, [(0, 0), (1, 1)]);
        assert_eq!(a.union(&b).nnz(), 2);
    }
}
