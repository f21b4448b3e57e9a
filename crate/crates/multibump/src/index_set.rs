//! Subsets of `{1, .., n}` labeling which positivity intervals carry a bump.

use crate::error::{Error, Result};
use serde::Serialize;
use std::cmp::Ordering;
use std::fmt;

/// Sorted, duplicate-free subset of `{1, .., n}` (1-based interval labels).
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(transparent)]
pub struct IndexSet {
    members: Vec<usize>,
}

impl IndexSet {
    pub fn new(members: impl IntoIterator<Item = usize>, n: usize) -> Result<Self> {
        let mut m: Vec<usize> = members.into_iter().collect();
        m.sort_unstable();
        m.dedup();
        if let Some(&bad) = m.iter().find(|&&i| i == 0 || i > n) {
            return Err(Error::InvalidInput(format!(
                "index {bad} outside 1..={n} in index set"
            )));
        }
        Ok(Self { members: m })
    }

    pub fn empty() -> Self {
        Self { members: Vec::new() }
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn cardinality(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.members.binary_search(&i).is_ok()
    }

    /// All `2^n` subsets of `{1, .., n}`, ordered by (cardinality, lexicographic).
    pub fn all_subsets(n: usize) -> Vec<IndexSet> {
        let mut out: Vec<IndexSet> = (0u32..(1 << n))
            .map(|mask| {
                let members = (1..=n).filter(|i| mask & (1 << (i - 1)) != 0);
                IndexSet::new(members, n).unwrap()
            })
            .collect();
        out.sort();
        out
    }

    /// The `2^n - 1` nonempty subsets, same ordering as [`Self::all_subsets`].
    pub fn nonempty_subsets(n: usize) -> Vec<IndexSet> {
        Self::all_subsets(n).into_iter().filter(|s| !s.is_empty()).collect()
    }

    /// All subsets of `self`, ordered by (cardinality, lexicographic).
    pub fn subsets(&self) -> Vec<IndexSet> {
        let k = self.members.len();
        let mut out: Vec<IndexSet> = (0u32..(1 << k))
            .map(|mask| {
                let members: Vec<usize> = self
                    .members
                    .iter()
                    .enumerate()
                    .filter(|(b, _)| mask & (1 << b) != 0)
                    .map(|(_, &i)| i)
                    .collect();
                IndexSet { members }
            })
            .collect();
        out.sort();
        out
    }
}

impl PartialOrd for IndexSet {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for IndexSet {
    fn cmp(&self, other: &Self) -> Ordering {
        self.cardinality()
            .cmp(&other.cardinality())
            .then_with(|| self.members.cmp(&other.members))
    }
}

impl fmt::Display for IndexSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (k, i) in self.members.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{i}")?;
        }
        write!(f, "}}")
    }
}
