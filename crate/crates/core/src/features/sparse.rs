use serde::{Deserialize, Serialize};

use super::FeatureError;

/// A sparse real vector with sorted, unique indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseVector {
    dim: usize,
    entries: Vec<(usize, f64)>,
}

impl SparseVector {
    /// Validates and sorts `entries`. Explicit zeros are kept.
    pub fn new(dim: usize, mut entries: Vec<(usize, f64)>) -> Result<Self, FeatureError> {
        entries.sort_by_key(|e| e.0);
        for w in entries.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(FeatureError::InvalidVector(format!("duplicate index {}", w[0].0)));
            }
        }
        if let Some(&(i, _)) = entries.iter().find(|e| e.0 >= dim) {
            return Err(FeatureError::InvalidVector(format!(
                "index {i} out of range for dimension {dim}"
            )));
        }
        if let Some(&(i, w)) = entries.iter().find(|e| !e.1.is_finite()) {
            return Err(FeatureError::InvalidVector(format!(
                "non-finite weight {w} at index {i}"
            )));
        }
        Ok(SparseVector { dim, entries })
    }

    pub(crate) fn from_sorted_unchecked(dim: usize, entries: Vec<(usize, f64)>) -> Self {
        debug_assert!(entries.windows(2).all(|w| w[0].0 < w[1].0));
        debug_assert!(entries.last().is_none_or(|e| e.0 < dim));
        SparseVector { dim, entries }
    }

    pub fn zero(dim: usize) -> Self {
        SparseVector {
            dim,
            entries: Vec::new(),
        }
    }

    pub fn from_dense(values: &[f64]) -> Self {
        let entries = values
            .iter()
            .enumerate()
            .filter(|(_, &v)| v != 0.0)
            .map(|(i, &v)| (i, v))
            .collect();
        SparseVector {
            dim: values.len(),
            entries,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|e| e.1 == 0.0)
    }

    /// Value at `index`; absent entries are zero.
    pub fn get(&self, index: usize) -> f64 {
        self.entries
            .binary_search_by_key(&index, |e| e.0)
            .map_or(0.0, |pos| self.entries[pos].1)
    }

    pub fn norm(&self) -> f64 {
        self.entries.iter().map(|e| e.1 * e.1).sum::<f64>().sqrt()
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut v = vec![0.0; self.dim];
        for &(i, w) in &self.entries {
            v[i] = w;
        }
        v
    }
}
