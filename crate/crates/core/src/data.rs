//! Dataset containers.
//!
//! Two shapes of data are supported:
//!
//! * [`GroupedSample`] — responses clustered into groups (families,
//!   clinics, repeated measurements per subject). Group sizes are treated
//!   as part of the data, not as design constants.
//! * [`SparseRatings`] — a sparsely observed rows x columns grid
//!   (raters x items), stored as explicit (row, col, value) entries.
//!
//! Both containers validate on construction and are immutable afterwards,
//! so they can be shared freely across threads.

use crate::error::{Error, Result};
use std::collections::HashSet;

/// One group of responses, optionally with a group-level regressor vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Group {
    id: String,
    responses: Vec<f64>,
    regressors: Option<Vec<f64>>,
}

impl Group {
    /// A group with responses only.
    pub fn new(id: impl Into<String>, responses: Vec<f64>) -> Self {
        Group {
            id: id.into(),
            responses,
            regressors: None,
        }
    }

    /// A group that also carries a regressor vector (shared by every
    /// observation in the group).
    pub fn with_regressors(
        id: impl Into<String>,
        responses: Vec<f64>,
        regressors: Vec<f64>,
    ) -> Self {
        Group {
            id: id.into(),
            responses,
            regressors: Some(regressors),
        }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn responses(&self) -> &[f64] {
        &self.responses
    }

    pub fn regressors(&self) -> Option<&[f64]> {
        self.regressors.as_deref()
    }

    /// Number of responses in this group.
    pub fn len(&self) -> usize {
        self.responses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.responses.is_empty()
    }
}

/// An ordered collection of groups.
///
/// Invariants (checked by [`GroupedSample::new`]):
/// * every group has at least one response;
/// * either no group carries regressors, or all groups carry regressor
///   vectors of the same length.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupedSample {
    groups: Vec<Group>,
    n_obs: usize,
}

impl GroupedSample {
    pub fn new(groups: Vec<Group>) -> Result<Self> {
        let mut expected_dim: Option<Option<usize>> = None;
        let mut n_obs = 0usize;
        for g in &groups {
            if g.responses.is_empty() {
                return Err(Error::EmptyGroup { id: g.id.clone() });
            }
            n_obs += g.responses.len();
            let dim = g.regressors.as_ref().map(Vec::len);
            match expected_dim {
                None => expected_dim = Some(dim),
                Some(expected) => {
                    if dim != expected {
                        return Err(Error::RaggedRegressors {
                            id: g.id.clone(),
                            got: dim.unwrap_or(0),
                            expected: expected.unwrap_or(0),
                        });
                    }
                }
            }
        }
        Ok(GroupedSample { groups, n_obs })
    }

    pub fn groups(&self) -> &[Group] {
        &self.groups
    }

    /// Number of groups, usually written `r`.
    pub fn n_groups(&self) -> usize {
        self.groups.len()
    }

    /// Total number of observations across all groups.
    pub fn n_obs(&self) -> usize {
        self.n_obs
    }

    /// Group sizes in group order.
    pub fn counts(&self) -> Vec<usize> {
        self.groups.iter().map(Group::len).collect()
    }

    /// Length of the per-group regressor vectors, if present.
    pub fn regressor_dim(&self) -> Option<usize> {
        self.groups
            .first()
            .and_then(|g| g.regressors.as_ref().map(Vec::len))
    }

    /// New sample containing the listed groups, in the order given.
    ///
    /// Used by chunked estimation: a chunk owns only its own groups.
    /// Panics if an index is out of range (callers pass validated plans).
    pub fn subset(&self, indices: &[usize]) -> GroupedSample {
        let groups: Vec<Group> = indices.iter().map(|&i| self.groups[i].clone()).collect();
        let n_obs = groups.iter().map(Group::len).sum();
        GroupedSample { groups, n_obs }
    }
}

/// A single observed cell of a ratings grid. Indices are 0-based.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatingEntry {
    pub row: usize,
    pub col: usize,
    pub value: f64,
}

impl RatingEntry {
    pub fn new(row: usize, col: usize, value: f64) -> Self {
        RatingEntry { row, col, value }
    }
}

/// Sparsely observed rows x columns grid.
///
/// Invariants (checked on construction):
/// * every entry lies inside the declared grid;
/// * no cell appears twice;
/// * `arrival_order`, when set, is a permutation of entry indices. It
///   records the order in which entries arrived (for example by
///   timestamp), which may differ from storage order.
///
/// Rows and columns with no entries are legal; their counts are zero.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseRatings {
    n_rows: usize,
    n_cols: usize,
    entries: Vec<RatingEntry>,
    arrival_order: Option<Vec<usize>>,
}

impl SparseRatings {
    pub fn new(n_rows: usize, n_cols: usize, entries: Vec<RatingEntry>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(entries.len());
        for e in &entries {
            if e.row >= n_rows || e.col >= n_cols {
                return Err(Error::CellOutOfRange {
                    row: e.row + 1,
                    col: e.col + 1,
                    n_rows,
                    n_cols,
                });
            }
            if !seen.insert((e.row, e.col)) {
                return Err(Error::DuplicateCell {
                    row: e.row + 1,
                    col: e.col + 1,
                });
            }
        }
        Ok(SparseRatings {
            n_rows,
            n_cols,
            entries,
            arrival_order: None,
        })
    }

    /// Attach an arrival order: `order[k]` is the index (into `entries`)
    /// of the k-th entry to arrive.
    pub fn with_arrival_order(mut self, order: Vec<usize>) -> Result<Self> {
        let n = self.entries.len();
        if order.len() != n {
            return Err(Error::InvalidArrivalOrder { n_entries: n });
        }
        let mut seen = vec![false; n];
        for &i in &order {
            if i >= n || seen[i] {
                return Err(Error::InvalidArrivalOrder { n_entries: n });
            }
            seen[i] = true;
        }
        self.arrival_order = Some(order);
        Ok(self)
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn n_entries(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[RatingEntry] {
        &self.entries
    }

    pub fn arrival_order(&self) -> Option<&[usize]> {
        self.arrival_order.as_deref()
    }

    /// Number of entries in each row (length `n_rows`, zeros included).
    pub fn row_counts(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.n_rows];
        for e in &self.entries {
            counts[e.row] += 1;
        }
        counts
    }

    /// Number of entries in each column (length `n_cols`, zeros included).
    pub fn col_counts(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.n_cols];
        for e in &self.entries {
            counts[e.col] += 1;
        }
        counts
    }

    /// Entry indices in arrival order (identity when no explicit order is
    /// attached, i.e. entries arrived in storage order).
    pub fn arrival_sequence(&self) -> Vec<usize> {
        match &self.arrival_order {
            Some(order) => order.clone(),
            None => (0..self.entries.len()).collect(),
        }
    }

    /// New ratings set containing the entries at the given *arrival
    /// positions*, stored in arrival order. The grid dimensions are kept,
    /// so row/column indices stay comparable across subsets.
    ///
    /// Panics if a position is out of range (callers pass validated plans).
    pub fn subset_by_arrival(&self, positions: &[usize]) -> SparseRatings {
        let entries = match &self.arrival_order {
            Some(order) => positions
                .iter()
                .map(|&p| self.entries[order[p]])
                .collect(),
            None => positions.iter().map(|&p| self.entries[p]).collect(),
        };
        SparseRatings {
            n_rows: self.n_rows,
            n_cols: self.n_cols,
            entries,
            arrival_order: None,
        }
    }
}
