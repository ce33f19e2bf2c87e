//! Sparse containers for basis coefficients.
//!
//! A `CoefficientField` maps indices `(eps, j, k)` to real coefficients. The
//! map is ordered (level first, then type bits, then translation), so every
//! iteration order — and therefore every reduction computed from a field —
//! is deterministic. A *complete* field for `J` detail levels holds exactly
//! `2^(Jn)` entries: the level-0 scaling block plus all detail blocks.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::dyadic::WaveletIndex;
use crate::error::Error;

/// Sparse real-valued coefficient field over the basis indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientField {
    n: usize,
    levels: u32,
    entries: BTreeMap<WaveletIndex, f64>,
}

impl CoefficientField {
    /// An empty field for dimension `n` with detail levels `0..levels`.
    pub fn empty(n: usize, levels: u32) -> Result<Self, Error> {
        if n != 1 && n != 2 {
            return Err(Error::invalid(format!("field dimension must be 1 or 2, got {n}")));
        }
        if levels == 0 || levels > 30 {
            return Err(Error::invalid(format!("level count {levels} out of range")));
        }
        Ok(CoefficientField { n, levels, entries: BTreeMap::new() })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of detail levels; valid detail indices have `j < levels`.
    pub fn levels(&self) -> u32 {
        self.levels
    }

    /// Number of stored entries.
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Inserts or overwrites one coefficient after validating the index.
    pub fn set(&mut self, idx: WaveletIndex, value: f64) -> Result<(), Error> {
        idx.validate(self.n, self.levels)?;
        self.entries.insert(idx, value);
        Ok(())
    }

    /// Coefficient at `idx`, or zero when absent.
    pub fn get(&self, idx: &WaveletIndex) -> f64 {
        self.entries.get(idx).copied().unwrap_or(0.0)
    }

    pub fn contains(&self, idx: &WaveletIndex) -> bool {
        self.entries.contains_key(idx)
    }

    /// Removes an entry, returning its value if present.
    pub fn remove(&mut self, idx: &WaveletIndex) -> Option<f64> {
        self.entries.remove(idx)
    }

    /// Entries in index order.
    pub fn iter(&self) -> impl Iterator<Item = (&WaveletIndex, &f64)> {
        self.entries.iter()
    }

    /// Mutable iteration in index order.
    pub fn iter_mut(&mut self) -> impl Iterator<Item = (&WaveletIndex, &mut f64)> {
        self.entries.iter_mut()
    }

    /// All valid indices for this shape, in index order: `2^(Jn)` of them.
    pub fn full_index_set(n: usize, levels: u32) -> Vec<WaveletIndex> {
        let mut out = Vec::new();
        // Scaling block: eps = 0, j = 0, single translation.
        out.push(WaveletIndex::new(0, 0, [0, 0]));
        for j in 0..levels {
            let side = 1u64 << j;
            for eps in 1..(1u8 << n) {
                for k0 in 0..side {
                    if n == 1 {
                        out.push(WaveletIndex::new(eps, j, [k0, 0]));
                    } else {
                        for k1 in 0..side {
                            out.push(WaveletIndex::new(eps, j, [k0, k1]));
                        }
                    }
                }
            }
        }
        out.sort();
        out
    }

    /// Whether the field stores every valid index (a full transform output).
    pub fn is_complete(&self) -> bool {
        let expected = expected_complete_len(self.n, self.levels);
        if self.entries.len() != expected {
            return false;
        }
        // Entry count matches and every stored index was validated on
        // insertion, so the index sets coincide.
        true
    }

    /// `sqrt(sum c^2)` over stored entries.
    pub fn l2_norm(&self) -> f64 {
        let mut acc = 0.0;
        for c in self.entries.values() {
            acc += c * c;
        }
        acc.sqrt()
    }

    /// Largest `|c|` over stored entries.
    pub fn sup_norm(&self) -> f64 {
        let mut best = 0.0f64;
        for c in self.entries.values() {
            best = best.max(c.abs());
        }
        best
    }

    /// Rescales every entry by `factor(idx)`.
    pub fn scale_entries(&self, mut factor: impl FnMut(&WaveletIndex) -> f64) -> CoefficientField {
        let entries = self
            .entries
            .iter()
            .map(|(idx, c)| (*idx, c * factor(idx)))
            .collect();
        CoefficientField { n: self.n, levels: self.levels, entries }
    }

    /// Keeps only entries satisfying the predicate.
    pub fn filter(&self, mut keep: impl FnMut(&WaveletIndex, f64) -> bool) -> CoefficientField {
        let entries = self
            .entries
            .iter()
            .filter(|(idx, c)| keep(idx, **c))
            .map(|(idx, c)| (*idx, *c))
            .collect();
        CoefficientField { n: self.n, levels: self.levels, entries }
    }

    /// Entrywise sum; absent entries count as zero.
    pub fn add(&self, other: &CoefficientField) -> CoefficientField {
        assert_eq!(self.n, other.n, "dimension mismatch");
        assert_eq!(self.levels, other.levels, "level mismatch");
        let mut entries = self.entries.clone();
        for (idx, c) in &other.entries {
            *entries.entry(*idx).or_insert(0.0) += c;
        }
        CoefficientField { n: self.n, levels: self.levels, entries }
    }

    /// Entrywise difference `self - other`.
    pub fn sub(&self, other: &CoefficientField) -> CoefficientField {
        self.add(&other.scale_entries(|_| -1.0))
    }

    /// Scalar multiple of every entry.
    pub fn scale(&self, c: f64) -> CoefficientField {
        self.scale_entries(|_| c)
    }
}

/// Entry count of a complete field: `2^(Jn)`.
pub fn expected_complete_len(n: usize, levels: u32) -> usize {
    1usize << (levels as usize * n)
}
