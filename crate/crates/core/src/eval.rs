//! Error-versus-memory evaluation: builds RACE sketches and reservoir samples
//! at a ladder of byte budgets and scores them against exact KDE.

use std::fmt;
use std::str::FromStr;

use crate::baselines::{exact_kde, sample_bytes, SampleSet};
use crate::error::{Error, Result};
use crate::io::EvalRecord;
use crate::kernels::KernelEval;
use crate::lsh::{derive_seed, Hasher, LshConfig, LshKind};
use crate::sketch::{RaceSketch, Storage, HEADER_LEN, TRAILER_LEN};
use crate::vectors::DataVector;

/// Hashers larger than this many projection coordinates are not materialized.
const MATERIALIZE_LIMIT: usize = 1 << 24;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Method {
    Race,
    Rs,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Race => "race",
            Method::Rs => "rs",
        }
    }

    fn tag(self) -> u64 {
        match self {
            Method::Race => 1,
            Method::Rs => 2,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "race" => Ok(Method::Race),
            "rs" => Ok(Method::Rs),
            other => Err(Error::InvalidConfig(format!("unknown method `{other}`"))),
        }
    }
}

#[derive(Clone, Debug)]
pub struct EvalPlan {
    pub kind: LshKind,
    pub sigma: f64,
    pub power: u32,
    /// Rehash range for L2/L1; ignored for SRP (which uses `2^power`).
    pub range: u64,
    pub methods: Vec<Method>,
    /// Byte budgets.
    pub sizes: Vec<u64>,
    pub repeats: usize,
    pub seed: u64,
    pub groups: usize,
    /// `None` picks storage from the range.
    pub storage: Option<Storage>,
}

impl EvalPlan {
    pub fn effective_range(&self) -> u64 {
        match self.kind {
            LshKind::Srp if self.power <= 63 => 1 << self.power,
            _ => self.range,
        }
    }

    /// Sketch config for a given row count, dimension and seed.
    pub fn config(&self, dim: usize, rows: usize, seed: u64) -> Result<LshConfig> {
        match self.kind {
            LshKind::Srp => LshConfig::srp(dim, self.power, rows, seed),
            kind => LshConfig::pstable(kind, dim, self.sigma, self.power, rows, self.range, seed),
        }
    }

    /// Rows that fit in `budget` bytes of dense 8-byte counters:
    /// `(budget - header) / (8 R)`.
    pub fn race_rows(&self, budget: u64) -> Result<usize> {
        let overhead = HEADER_LEN + TRAILER_LEN;
        let per_row = 8u64.saturating_mul(self.effective_range());
        let rows = budget.saturating_sub(overhead) / per_row;
        if rows < self.groups as u64 {
            return Err(Error::InvalidConfig(format!(
                "budget of {budget} bytes fits {rows} rows, fewer than {} groups",
                self.groups
            )));
        }
        Ok(rows as usize)
    }

    /// Checks everything that does not depend on the data.
    pub fn validate(&self) -> Result<()> {
        self.config(1, 1, 0)?;
        if self.methods.is_empty() || self.sizes.is_empty() {
            return Err(Error::InvalidConfig(
                "need at least one method and size".into(),
            ));
        }
        if self.repeats == 0 {
            return Err(Error::InvalidConfig("repeats must be at least 1".into()));
        }
        if self.groups == 0 || self.groups.is_multiple_of(2) {
            return Err(Error::InvalidGroups {
                groups: self.groups,
                rows: 0,
            });
        }
        if self.methods.contains(&Method::Race) {
            for &b in &self.sizes {
                self.race_rows(b)?;
            }
        }
        Ok(())
    }

    fn params(&self) -> String {
        format!(
            "kind={};sigma={};power={};range={}",
            self.kind,
            self.sigma,
            self.power,
            self.effective_range()
        )
    }
}

/// Runs every (method, size, repetition) cell and returns one record per
/// query and cell, ordered by cell then query.
pub fn run_eval(
    plan: &EvalPlan,
    dataset: &[DataVector],
    queries: &[DataVector],
) -> Result<Vec<EvalRecord>> {
    plan.validate()?;
    let dim = dataset.first().ok_or(Error::EmptyDataset)?.dim();
    let kernel = KernelEval::from_config(&plan.config(dim, 1, 0)?);
    let exact = queries
        .iter()
        .map(|q| exact_kde(dataset, q, &kernel))
        .collect::<Result<Vec<_>>>()?;

    let mut records = Vec::new();
    for &method in &plan.methods {
        for &budget in &plan.sizes {
            for rep in 0..plan.repeats {
                let seed = derive_seed(plan.seed, &[method.tag(), rep as u64]);
                let base = format!("{};budget={budget};rep={rep}", plan.params());
                match method {
                    Method::Race => {
                        let rows = plan.race_rows(budget)?;
                        let cfg = plan.config(dim, rows, seed)?;
                        let (sketch, hasher) = build_race(&cfg, plan.storage, dataset)?;
                        let bytes = sketch.memory_bytes();
                        let params = format!("{base};rows={rows};groups={}", plan.groups);
                        for (i, q) in queries.iter().enumerate() {
                            let est = sketch.estimate_with(&hasher, q, plan.groups)?.value;
                            records.push(EvalRecord::new(
                                i as u64,
                                method.name(),
                                params.clone(),
                                bytes,
                                Some(exact[i]),
                                est,
                            ));
                        }
                    }
                    Method::Rs => {
                        let samples = rs_capacity(dataset, budget)?;
                        let mut rs = SampleSet::new(samples, seed)?;
                        dataset.iter().for_each(|x| rs.add(x));
                        let bytes = rs.memory_bytes();
                        let params = format!("{base};samples={samples}");
                        for (i, q) in queries.iter().enumerate() {
                            records.push(EvalRecord::new(
                                i as u64,
                                method.name(),
                                params.clone(),
                                bytes,
                                Some(exact[i]),
                                rs.estimate(q, &kernel)?,
                            ));
                        }
                    }
                }
            }
        }
    }
    Ok(records)
}

/// Materialized hasher when the projections fit in memory, streaming otherwise.
pub fn hasher_for(cfg: &LshConfig) -> Result<Hasher> {
    let coords = cfg
        .rows
        .saturating_mul(cfg.power as usize)
        .saturating_mul(cfg.dim);
    if coords <= MATERIALIZE_LIMIT {
        Hasher::materialized(cfg)
    } else {
        Hasher::new(cfg)
    }
}

/// One pass over `dataset` into a fresh sketch.
pub fn build_race(
    cfg: &LshConfig,
    storage: Option<Storage>,
    dataset: &[DataVector],
) -> Result<(RaceSketch, Hasher)> {
    let hasher = hasher_for(cfg)?;
    let mut sketch = match storage {
        Some(s) => RaceSketch::with_storage(*cfg, s)?,
        None => RaceSketch::new(*cfg)?,
    };
    let mut slots = Vec::with_capacity(cfg.rows);
    for x in dataset {
        hasher.hash_into(x, &mut slots)?;
        sketch.add_slots(&slots)?;
    }
    Ok((sketch, hasher))
}

/// Samples that fit `budget` at the dataset's mean per-sample cost.
pub fn rs_capacity(dataset: &[DataVector], budget: u64) -> Result<usize> {
    let total: u64 = dataset.iter().map(sample_bytes).sum();
    let per_sample = total.div_ceil(dataset.len().max(1) as u64).max(1);
    let m = budget / per_sample;
    if m == 0 {
        return Err(Error::InvalidConfig(format!(
            "budget of {budget} bytes holds no samples of {per_sample} bytes"
        )));
    }
    Ok(m as usize)
}
