//! The RACE sketch: `L` rows of `R` integer counters indexed by LSH slots.
//!
//! Adding a vector increments one counter per row; removing it decrements the
//! same counters. Sketches built with the same config merge by elementwise
//! addition, and the merged sketch is identical to one built from the union of
//! the two streams. Queries read the counter at the query's slot in every row
//! and combine the rows with median-of-means.
//!
//! Every row always sums to the number of summarized items. Counters are kept
//! as `u64` in memory; the file format narrows them (see [`format`]).

mod format;

use std::collections::BTreeMap;

pub use format::{HEADER_LEN, MAGIC, TRAILER_LEN, VERSION};

use crate::error::{Error, Result};
use crate::lsh::{Hasher, LshConfig, LshKind, REHASH_FAMILY_ID};
use crate::vectors::DataVector;

/// Ranges up to this size default to dense rows.
pub const DENSE_RANGE_LIMIT: u64 = 4096;

/// Default number of median-of-means groups.
pub const DEFAULT_GROUPS: usize = 9;

/// Largest dense counter grid (rows × range) a sketch will allocate.
pub const MAX_DENSE_COUNTERS: u64 = 1 << 28;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Storage {
    Dense,
    Sparse,
}

impl Storage {
    /// Dense for `range <= DENSE_RANGE_LIMIT`, sparse otherwise.
    pub fn auto(range: u64) -> Self {
        if range <= DENSE_RANGE_LIMIT {
            Storage::Dense
        } else {
            Storage::Sparse
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Counts {
    /// Row-major `rows * range` grid.
    Dense(Vec<u64>),
    /// One map per row holding only nonzero counters.
    Sparse(Vec<BTreeMap<u64, u64>>),
}

/// Result of a median-of-means query.
#[derive(Clone, Debug, PartialEq)]
pub struct KdeEstimate {
    /// Median of `group_means`.
    pub value: f64,
    pub group_means: Vec<f64>,
    pub groups: usize,
}

impl KdeEstimate {
    /// `value` clamped at zero. Rehashed estimates can be slightly negative for
    /// tiny densities; clamping biases the estimator upward.
    pub fn clamped(&self) -> f64 {
        self.value.max(0.0)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RaceSketch {
    config: LshConfig,
    counts: Counts,
    items: u64,
    rehash_family_id: u32,
}

impl RaceSketch {
    /// Empty sketch with storage chosen by [`Storage::auto`].
    pub fn new(config: LshConfig) -> Result<Self> {
        Self::with_storage(config, Storage::auto(config.range))
    }

    pub fn with_storage(config: LshConfig, storage: Storage) -> Result<Self> {
        config.validate()?;
        let counts = match storage {
            Storage::Dense => {
                let cells = (config.rows as u64).checked_mul(config.range);
                match cells {
                    Some(n) if n <= MAX_DENSE_COUNTERS => Counts::Dense(vec![0; n as usize]),
                    _ => {
                        return Err(Error::InvalidConfig(format!(
                            "dense grid of {} x {} counters is too large; use sparse storage",
                            config.rows, config.range
                        )))
                    }
                }
            }
            Storage::Sparse => Counts::Sparse(vec![BTreeMap::new(); config.rows]),
        };
        Ok(Self {
            config,
            counts,
            items: 0,
            rehash_family_id: REHASH_FAMILY_ID,
        })
    }

    pub fn config(&self) -> &LshConfig {
        &self.config
    }

    /// Number of vectors currently summarized.
    pub fn items(&self) -> u64 {
        self.items
    }

    pub fn is_empty(&self) -> bool {
        self.items == 0
    }

    pub fn rehash_family_id(&self) -> u32 {
        self.rehash_family_id
    }

    pub fn storage(&self) -> Storage {
        match self.counts {
            Counts::Dense(_) => Storage::Dense,
            Counts::Sparse(_) => Storage::Sparse,
        }
    }

    pub fn counter(&self, row: usize, slot: u64) -> u64 {
        match &self.counts {
            Counts::Dense(grid) => grid[row * self.config.range as usize + slot as usize],
            Counts::Sparse(rows) => rows[row].get(&slot).copied().unwrap_or(0),
        }
    }

    /// Nonzero `(slot, count)` pairs of one row, in slot order.
    pub fn row_entries(&self, row: usize) -> Vec<(u64, u64)> {
        match &self.counts {
            Counts::Dense(grid) => {
                let r = self.config.range as usize;
                grid[row * r..(row + 1) * r]
                    .iter()
                    .enumerate()
                    .filter(|(_, c)| **c != 0)
                    .map(|(s, c)| (s as u64, *c))
                    .collect()
            }
            Counts::Sparse(rows) => rows[row].iter().map(|(s, c)| (*s, *c)).collect(),
        }
    }

    pub fn row_sum(&self, row: usize) -> u64 {
        match &self.counts {
            Counts::Dense(grid) => {
                let r = self.config.range as usize;
                grid[row * r..(row + 1) * r].iter().sum()
            }
            Counts::Sparse(rows) => rows[row].values().sum(),
        }
    }

    pub fn nonzero_counters(&self) -> u64 {
        match &self.counts {
            Counts::Dense(grid) => grid.iter().filter(|c| **c != 0).count() as u64,
            Counts::Sparse(rows) => rows.iter().map(|r| r.len() as u64).sum(),
        }
    }

    /// Fraction of the `rows * range` counters that are nonzero.
    pub fn nonzero_fraction(&self) -> f64 {
        self.nonzero_counters() as f64 / (self.config.rows as f64 * self.config.range as f64)
    }

    pub fn max_counter(&self) -> u64 {
        match &self.counts {
            Counts::Dense(grid) => grid.iter().copied().max().unwrap_or(0),
            Counts::Sparse(rows) => rows
                .iter()
                .flat_map(|r| r.values().copied())
                .max()
                .unwrap_or(0),
        }
    }

    fn check_hasher(&self, hasher: &Hasher) -> Result<()> {
        if hasher.config() != &self.config {
            return Err(Error::InvalidConfig(
                "hasher config differs from sketch config".into(),
            ));
        }
        Ok(())
    }

    fn check_slots(&self, slots: &[u64]) -> Result<()> {
        if slots.len() != self.config.rows {
            return Err(Error::InvalidConfig(format!(
                "expected {} slots, got {}",
                self.config.rows,
                slots.len()
            )));
        }
        if let Some(s) = slots.iter().find(|s| **s >= self.config.range) {
            return Err(Error::OutOfRange(format!(
                "slot {s} not below range {}",
                self.config.range
            )));
        }
        Ok(())
    }

    /// Adds `x` to the summary, hashing it with freshly generated projections.
    pub fn add(&mut self, x: &DataVector) -> Result<()> {
        let slots = Hasher::new(&self.config)?.hash_all(x)?;
        self.add_slots(&slots)
    }

    /// Adds `x` using a prebuilt (possibly materialized) hasher.
    pub fn add_with(&mut self, hasher: &Hasher, x: &DataVector) -> Result<()> {
        self.check_hasher(hasher)?;
        let slots = hasher.hash_all(x)?;
        self.add_slots(&slots)
    }

    /// Increments one counter per row given precomputed slots.
    pub fn add_slots(&mut self, slots: &[u64]) -> Result<()> {
        self.check_slots(slots)?;
        let r = self.config.range as usize;
        match &mut self.counts {
            Counts::Dense(grid) => {
                for (row, &s) in slots.iter().enumerate() {
                    grid[row * r + s as usize] += 1;
                }
            }
            Counts::Sparse(rows) => {
                for (row, &s) in slots.iter().enumerate() {
                    *rows[row].entry(s).or_insert(0) += 1;
                }
            }
        }
        self.items += 1;
        Ok(())
    }

    /// Removes a previously added `x`. Fails without modifying the sketch if
    /// any touched counter is already zero.
    pub fn remove(&mut self, x: &DataVector) -> Result<()> {
        let slots = Hasher::new(&self.config)?.hash_all(x)?;
        self.remove_slots(&slots)
    }

    pub fn remove_with(&mut self, hasher: &Hasher, x: &DataVector) -> Result<()> {
        self.check_hasher(hasher)?;
        let slots = hasher.hash_all(x)?;
        self.remove_slots(&slots)
    }

    pub fn remove_slots(&mut self, slots: &[u64]) -> Result<()> {
        self.check_slots(slots)?;
        if self.items == 0
            || slots
                .iter()
                .enumerate()
                .any(|(row, &s)| self.counter(row, s) == 0)
        {
            return Err(Error::UnmatchedDeletion);
        }
        let r = self.config.range as usize;
        match &mut self.counts {
            Counts::Dense(grid) => {
                for (row, &s) in slots.iter().enumerate() {
                    grid[row * r + s as usize] -= 1;
                }
            }
            Counts::Sparse(rows) => {
                for (row, &s) in slots.iter().enumerate() {
                    let c = rows[row].get_mut(&s).expect("checked above");
                    *c -= 1;
                    if *c == 0 {
                        rows[row].remove(&s);
                    }
                }
            }
        }
        self.items -= 1;
        Ok(())
    }

    /// Name of the first identity field that differs, if any.
    fn mismatch(&self, other: &RaceSketch) -> Option<&'static str> {
        let (a, b) = (&self.config, &other.config);
        if a.kind != b.kind {
            Some("kind")
        } else if a.dim != b.dim {
            Some("dim")
        } else if a.sigma.to_bits() != b.sigma.to_bits() {
            Some("sigma")
        } else if a.power != b.power {
            Some("power")
        } else if a.rows != b.rows {
            Some("rows")
        } else if a.range != b.range {
            Some("range")
        } else if a.seed != b.seed {
            Some("seed")
        } else if self.rehash_family_id != other.rehash_family_id {
            Some("rehash_family_id")
        } else {
            None
        }
    }

    pub fn is_mergeable_with(&self, other: &RaceSketch) -> bool {
        self.mismatch(other).is_none()
    }

    /// Adds `other`'s counters into `self`.
    pub fn merge_from(&mut self, other: &RaceSketch) -> Result<()> {
        if let Some(field) = self.mismatch(other) {
            return Err(Error::ConfigMismatch { field });
        }
        let r = self.config.range as usize;
        match (&mut self.counts, &other.counts) {
            (Counts::Dense(a), Counts::Dense(b)) => {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
            }
            (Counts::Sparse(a), Counts::Sparse(b)) => {
                for (ra, rb) in a.iter_mut().zip(b) {
                    for (s, c) in rb {
                        *ra.entry(*s).or_insert(0) += c;
                    }
                }
            }
            (Counts::Dense(a), Counts::Sparse(_)) => {
                for row in 0..self.config.rows {
                    for (s, c) in other.row_entries(row) {
                        a[row * r + s as usize] += c;
                    }
                }
            }
            (Counts::Sparse(a), Counts::Dense(_)) => {
                for (row, ra) in a.iter_mut().enumerate() {
                    for (s, c) in other.row_entries(row) {
                        *ra.entry(s).or_insert(0) += c;
                    }
                }
            }
        }
        self.items += other.items;
        Ok(())
    }

    /// Sketch of the union of both streams. The result keeps `self`'s storage.
    pub fn merge(&self, other: &RaceSketch) -> Result<RaceSketch> {
        let mut out = self.clone();
        out.merge_from(other)?;
        Ok(out)
    }

    /// Counter at the query's slot in each row.
    pub fn raw_query(&self, q: &DataVector) -> Result<Vec<u64>> {
        self.raw_query_with(&Hasher::new(&self.config)?, q)
    }

    pub fn raw_query_with(&self, hasher: &Hasher, q: &DataVector) -> Result<Vec<u64>> {
        self.check_hasher(hasher)?;
        if self.items == 0 {
            return Err(Error::EmptySketch);
        }
        let slots = hasher.hash_all(q)?;
        Ok(slots
            .iter()
            .enumerate()
            .map(|(row, &s)| self.counter(row, s))
            .collect())
    }

    /// Per-row density estimates: `count / N` for SRP rows and the debiased
    /// `(count / N - 1/R) * R / (R - 1)` for rehashed rows.
    pub fn row_estimates(&self, q: &DataVector) -> Result<Vec<f64>> {
        self.row_estimates_with(&Hasher::new(&self.config)?, q)
    }

    pub fn row_estimates_with(&self, hasher: &Hasher, q: &DataVector) -> Result<Vec<f64>> {
        let counts = self.raw_query_with(hasher, q)?;
        let n = self.items as f64;
        Ok(if self.config.kind.is_rehashed() {
            let r = self.config.range as f64;
            counts.iter().map(|&c| debias(c as f64 / n, r)).collect()
        } else {
            counts.iter().map(|&c| c as f64 / n).collect()
        })
    }

    /// Median-of-means estimate of `K(q) = mean_x k^p(x, q)` for finite-range
    /// (SRP) sketches.
    pub fn estimate_finite(&self, q: &DataVector, groups: usize) -> Result<KdeEstimate> {
        if self.config.kind != LshKind::Srp {
            return Err(Error::WrongEstimator(
                "finite-range estimator requires an SRP sketch".into(),
            ));
        }
        self.estimate(q, groups)
    }

    /// Median-of-means of debiased group means, for rehashed (L2/L1)
    /// sketches. Unbiased per row; the value may be negative.
    pub fn estimate_rehashed(&self, q: &DataVector, groups: usize) -> Result<KdeEstimate> {
        if !self.config.kind.is_rehashed() {
            return Err(Error::WrongEstimator(
                "rehashed estimator requires an L2 or L1 sketch".into(),
            ));
        }
        self.estimate(q, groups)
    }

    /// Dispatches to the finite or rehashed estimator by kind.
    pub fn estimate(&self, q: &DataVector, groups: usize) -> Result<KdeEstimate> {
        self.estimate_with(&Hasher::new(&self.config)?, q, groups)
    }

    pub fn estimate_with(
        &self,
        hasher: &Hasher,
        q: &DataVector,
        groups: usize,
    ) -> Result<KdeEstimate> {
        check_groups(groups, self.config.rows)?;
        let values = self.row_estimates_with(hasher, q)?;
        median_of_means(&values, groups)
    }

    /// Exact size of the serialized sketch in bytes.
    pub fn memory_bytes(&self) -> u64 {
        format::serialized_len(self)
    }
}

fn debias(ratio: f64, range: f64) -> f64 {
    (ratio - 1.0 / range) * range / (range - 1.0)
}

fn check_groups(groups: usize, rows: usize) -> Result<()> {
    if groups == 0 || groups > rows || groups.is_multiple_of(2) {
        return Err(Error::InvalidGroups { groups, rows });
    }
    Ok(())
}

/// Splits `values` into `groups` contiguous groups of `values.len() / groups`
/// entries (trailing surplus ignored) and returns the median of group means.
pub fn median_of_means(values: &[f64], groups: usize) -> Result<KdeEstimate> {
    check_groups(groups, values.len())?;
    let size = values.len() / groups;
    let group_means: Vec<f64> = values
        .chunks_exact(size)
        .take(groups)
        .map(|g| g.iter().sum::<f64>() / size as f64)
        .collect();
    Ok(KdeEstimate {
        value: median_odd(&group_means),
        group_means,
        groups,
    })
}

fn median_odd(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted[sorted.len() / 2]
}
