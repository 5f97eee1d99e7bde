//! LSH families (signed random projections, Gaussian and Cauchy p-stable
//! projections), power-p concatenation, and universal rehashing to a finite
//! slot range.
//!
//! No projection matrix is stored. Every projection coordinate and offset is
//! a pure function of `(seed, row, concat, index)`, produced by a
//! counter-based generator: the index tuple is mixed into 64 uniform bits and
//! then transformed to the target distribution. Sparse inputs therefore hash
//! in `O(nnz * rows * power)` and two processes with the same seed agree
//! bit-for-bit. [`Hasher::materialized`] caches the same values in memory for
//! bulk dense workloads; it produces identical slots.

use std::f64::consts::PI;
use std::fmt;

use crate::error::{Error, Result};
use crate::vectors::DataVector;

/// Identifier of the rehash family implemented by [`rehash`]: polynomial
/// fingerprint over GF(2^61 - 1) followed by a Carter-Wegman affine map,
/// reduced mod R. Stored in sketch headers.
pub const REHASH_FAMILY_ID: u32 = 1;

const MERSENNE_61: u64 = (1 << 61) - 1;
const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

const TAG_PROJECTION: u64 = 0x7072_6f6a_6563_7431;
const TAG_OFFSET: u64 = 0x6f66_6673_6574_3031;
const TAG_REHASH: u64 = 0x7265_6861_7368_3031;
const LANE_SECOND: u64 = 0x5851_f42d_4c95_7f2d;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum LshKind {
    /// Signed random projection; angular kernel.
    Srp,
    /// Gaussian p-stable projection; Euclidean distance.
    L2,
    /// Cauchy p-stable projection; Manhattan distance.
    L1,
}

impl LshKind {
    pub fn code(self) -> u8 {
        match self {
            LshKind::Srp => 0,
            LshKind::L2 => 1,
            LshKind::L1 => 2,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(LshKind::Srp),
            1 => Some(LshKind::L2),
            2 => Some(LshKind::L1),
            _ => None,
        }
    }

    /// Whether codes are rehashed to a finite range (infinite-range families).
    pub fn is_rehashed(self) -> bool {
        !matches!(self, LshKind::Srp)
    }

    fn distribution(self) -> Distribution {
        match self {
            LshKind::Srp | LshKind::L2 => Distribution::Gaussian,
            LshKind::L1 => Distribution::Cauchy,
        }
    }
}

impl fmt::Display for LshKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LshKind::Srp => "srp",
            LshKind::L2 => "l2",
            LshKind::L1 => "l1",
        })
    }
}

impl std::str::FromStr for LshKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "srp" => Ok(LshKind::Srp),
            "l2" => Ok(LshKind::L2),
            "l1" => Ok(LshKind::L1),
            other => Err(Error::InvalidConfig(format!("unknown LSH kind `{other}`"))),
        }
    }
}

/// Distribution of projection coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Distribution {
    Gaussian,
    Cauchy,
}

/// Parameters of the L hash functions. Two sketches built from equal configs
/// hash identically.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LshConfig {
    pub kind: LshKind,
    pub dim: usize,
    /// Bucket width σ of the p-stable families; ignored by SRP.
    pub sigma: f64,
    /// Number of concatenated base hashes per row.
    pub power: u32,
    /// Number of independent rows L.
    pub rows: usize,
    /// Slots per row: `2^power` for SRP, the rehash target R otherwise.
    pub range: u64,
    pub seed: u64,
}

impl LshConfig {
    /// SRP config; the range is fixed to `2^power`.
    pub fn srp(dim: usize, power: u32, rows: usize, seed: u64) -> Result<Self> {
        if power == 0 || power > 63 {
            return Err(Error::InvalidConfig(format!(
                "SRP power must be in 1..=63, got {power}"
            )));
        }
        let cfg = Self {
            kind: LshKind::Srp,
            dim,
            sigma: 1.0,
            power,
            rows,
            range: 1 << power,
            seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Rehashed p-stable config (`kind` is L2 or L1).
    pub fn pstable(
        kind: LshKind,
        dim: usize,
        sigma: f64,
        power: u32,
        rows: usize,
        range: u64,
        seed: u64,
    ) -> Result<Self> {
        if kind == LshKind::Srp {
            return Err(Error::InvalidConfig(
                "use LshConfig::srp for signed random projections".into(),
            ));
        }
        let cfg = Self {
            kind,
            dim,
            sigma,
            power,
            rows,
            range,
            seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.dim == 0 || self.dim > u32::MAX as usize {
            return bad(format!("dimension must be in 1..=2^32-1, got {}", self.dim));
        }
        if self.power == 0 || self.power > u16::MAX as u32 {
            return bad(format!("power must be in 1..=65535, got {}", self.power));
        }
        if self.rows == 0 || self.rows > u32::MAX as usize {
            return bad(format!("rows must be in 1..=2^32-1, got {}", self.rows));
        }
        if self.range < 2 {
            return bad(format!("range must be at least 2, got {}", self.range));
        }
        match self.kind {
            LshKind::Srp => {
                if self.power > 63 || self.range != 1u64 << self.power {
                    return bad(format!(
                        "SRP range must equal 2^power = 2^{}, got {}",
                        self.power, self.range
                    ));
                }
            }
            LshKind::L2 | LshKind::L1 => {
                if !(self.sigma.is_finite() && self.sigma > 0.0) {
                    return bad(format!("sigma must be positive, got {}", self.sigma));
                }
            }
        }
        Ok(())
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_rows(mut self, rows: usize) -> Self {
        self.rows = rows;
        self
    }

    pub fn with_power(mut self, power: u32) -> Self {
        self.power = power;
        if self.kind == LshKind::Srp && power <= 63 {
            self.range = 1 << power;
        }
        self
    }
}

#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[inline]
fn absorb(h: u64, x: u64) -> u64 {
    mix64(h.wrapping_add(GOLDEN) ^ x)
}

#[inline]
fn key(tag: u64, seed: u64, row: u64, concat: u64) -> u64 {
    absorb(absorb(absorb(tag, seed), row), concat)
}

/// Derives an independent seed from a master seed and a sequence of tags.
pub fn derive_seed(seed: u64, parts: &[u64]) -> u64 {
    parts
        .iter()
        .fold(mix64(seed ^ GOLDEN), |h, &p| absorb(h, p))
}

/// Uniform in `[0, 1)` with 53 bits of precision.
#[inline]
fn unit(bits: u64) -> f64 {
    (bits >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Uniform in the open interval `(0, 1)`.
#[inline]
fn unit_open(bits: u64) -> f64 {
    ((bits >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

#[inline]
fn component_from_key(dist: Distribution, k: u64) -> f64 {
    match dist {
        Distribution::Gaussian => {
            // Box-Muller, cosine branch.
            let u1 = unit_open(mix64(k));
            let u2 = unit(mix64(k ^ LANE_SECOND));
            (-2.0 * u1.ln()).sqrt() * (2.0 * PI * u2).cos()
        }
        Distribution::Cauchy => (PI * (unit_open(mix64(k)) - 0.5)).tan(),
    }
}

/// Coordinate `dim_index` of projection vector `w[row][concat]`.
pub fn projection_component(
    dist: Distribution,
    seed: u64,
    row: usize,
    concat: usize,
    dim_index: usize,
) -> f64 {
    let k = absorb(
        key(TAG_PROJECTION, seed, row as u64, concat as u64),
        dim_index as u64,
    );
    component_from_key(dist, k)
}

/// Offset `b[row][concat]`, uniform in `[0, sigma)`.
pub fn offset_component(seed: u64, row: usize, concat: usize, sigma: f64) -> f64 {
    let b = unit(mix64(key(TAG_OFFSET, seed, row as u64, concat as u64))) * sigma;
    if b < sigma {
        b
    } else {
        sigma * (1.0 - f64::EPSILON)
    }
}

#[derive(Clone, Copy, Debug)]
struct RowRehash {
    point: u64,
    mul: u64,
    add: u64,
}

impl RowRehash {
    fn new(seed: u64, row: usize) -> Self {
        let base = key(TAG_REHASH, seed, row as u64, 0);
        let field = |lane: u64| mix64(base ^ lane.wrapping_mul(GOLDEN)) % MERSENNE_61;
        Self {
            point: field(1),
            mul: field(2).max(1),
            add: field(3),
        }
    }

    #[inline]
    fn absorb(&self, acc: u64, component: i64) -> u64 {
        add_mod61(
            mul_mod61(acc, self.point),
            component.rem_euclid(MERSENNE_61 as i64) as u64,
        )
    }

    #[inline]
    fn finish(&self, fingerprint: u64, range: u64) -> u64 {
        add_mod61(mul_mod61(self.mul, fingerprint), self.add) % range
    }
}

#[inline]
fn mul_mod61(a: u64, b: u64) -> u64 {
    let r = a as u128 * b as u128;
    add_mod61((r as u64) & MERSENNE_61, (r >> 61) as u64)
}

#[inline]
fn add_mod61(a: u64, b: u64) -> u64 {
    let s = a + b;
    if s >= MERSENNE_61 {
        s - MERSENNE_61
    } else {
        s
    }
}

/// Maps a p-stable code of row `row` to a slot in `[0, range)`.
///
/// Equal tuples always land in the same slot; for distinct tuples the slot
/// collision probability over seeds is at most about `1/range`.
pub fn rehash(tuple: &[i64], row: usize, range: u64, seed: u64) -> u64 {
    assert!(range >= 2, "rehash range must be at least 2");
    let rh = RowRehash::new(seed, row);
    let fp = tuple.iter().fold(0, |acc, &t| rh.absorb(acc, t));
    rh.finish(fp, range)
}

/// Evaluates the hash functions of a config. The default mode regenerates
/// projection coordinates on the fly; [`Hasher::materialized`] precomputes
/// them, trading `rows * power * dim` floats of memory for speed.
#[derive(Clone, Debug)]
pub struct Hasher {
    cfg: LshConfig,
    dist: Distribution,
    projections: Option<Vec<f64>>,
    offsets: Vec<f64>,
    rehashers: Vec<RowRehash>,
}

impl Hasher {
    pub fn new(cfg: &LshConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            cfg: *cfg,
            dist: cfg.kind.distribution(),
            projections: None,
            offsets: Vec::new(),
            rehashers: Vec::new(),
        })
    }

    pub fn materialized(cfg: &LshConfig) -> Result<Self> {
        let mut h = Self::new(cfg)?;
        let p = cfg.power as usize;
        let mut proj = Vec::with_capacity(cfg.rows * p * cfg.dim);
        for row in 0..cfg.rows {
            for j in 0..p {
                proj.extend(
                    (0..cfg.dim).map(|i| projection_component(h.dist, cfg.seed, row, j, i)),
                );
            }
        }
        h.projections = Some(proj);
        if cfg.kind.is_rehashed() {
            h.offsets = (0..cfg.rows)
                .flat_map(|row| (0..p).map(move |j| offset_component(cfg.seed, row, j, cfg.sigma)))
                .collect();
            h.rehashers = (0..cfg.rows).map(|r| RowRehash::new(cfg.seed, r)).collect();
        }
        Ok(h)
    }

    pub fn config(&self) -> &LshConfig {
        &self.cfg
    }

    pub fn is_materialized(&self) -> bool {
        self.projections.is_some()
    }

    fn check_dim(&self, x: &DataVector) -> Result<()> {
        if x.dim() != self.cfg.dim {
            return Err(Error::DimensionMismatch {
                expected: self.cfg.dim,
                actual: x.dim(),
            });
        }
        Ok(())
    }

    /// `dot(w[row][concat], x)`.
    #[inline]
    fn project(&self, x: &DataVector, row: usize, concat: usize) -> f64 {
        match &self.projections {
            Some(proj) => {
                let d = self.cfg.dim;
                let start = (row * self.cfg.power as usize + concat) * d;
                let w = &proj[start..start + d];
                match x.as_dense() {
                    Some(xs) => xs.iter().zip(w).map(|(a, b)| a * b).sum(),
                    None => x.iter_stored().map(|(i, v)| v * w[i]).sum(),
                }
            }
            None => {
                let k = key(TAG_PROJECTION, self.cfg.seed, row as u64, concat as u64);
                x.iter_stored()
                    .filter(|(_, v)| *v != 0.0)
                    .map(|(i, v)| v * component_from_key(self.dist, absorb(k, i as u64)))
                    .sum()
            }
        }
    }

    #[inline]
    fn offset(&self, row: usize, concat: usize) -> f64 {
        if self.offsets.is_empty() {
            offset_component(self.cfg.seed, row, concat, self.cfg.sigma)
        } else {
            self.offsets[row * self.cfg.power as usize + concat]
        }
    }

    #[inline]
    fn bucket(&self, x: &DataVector, row: usize, concat: usize) -> i64 {
        ((self.project(x, row, concat) + self.offset(row, concat)) / self.cfg.sigma).floor() as i64
    }

    /// Packed SRP code of `x` in row `row`: bit `j` is set iff
    /// `dot(w[row][j], x) >= 0`.
    pub fn srp_hash(&self, x: &DataVector, row: usize) -> Result<u64> {
        if self.cfg.kind != LshKind::Srp {
            return Err(Error::InvalidConfig(
                "srp_hash requires an SRP config".into(),
            ));
        }
        self.check_dim(x)?;
        Ok(self.srp_code(x, row))
    }

    fn srp_code(&self, x: &DataVector, row: usize) -> u64 {
        (0..self.cfg.power as usize).fold(0u64, |code, j| {
            code | (u64::from(self.project(x, row, j) >= 0.0) << j)
        })
    }

    /// The `power` p-stable bucket indices of `x` in row `row`.
    pub fn pstable_hash(&self, x: &DataVector, row: usize) -> Result<Vec<i64>> {
        if !self.cfg.kind.is_rehashed() {
            return Err(Error::InvalidConfig(
                "pstable_hash requires an L2 or L1 config".into(),
            ));
        }
        self.check_dim(x)?;
        Ok((0..self.cfg.power as usize)
            .map(|j| self.bucket(x, row, j))
            .collect())
    }

    /// Slot of `x` in row `row`, in `[0, range)`.
    pub fn slot(&self, x: &DataVector, row: usize) -> Result<u64> {
        self.check_dim(x)?;
        Ok(self.slot_unchecked(x, row))
    }

    #[inline]
    fn slot_unchecked(&self, x: &DataVector, row: usize) -> u64 {
        match self.cfg.kind {
            LshKind::Srp => self.srp_code(x, row),
            LshKind::L2 | LshKind::L1 => {
                let fresh;
                let rh = match self.rehashers.get(row) {
                    Some(rh) => rh,
                    None => {
                        fresh = RowRehash::new(self.cfg.seed, row);
                        &fresh
                    }
                };
                let fp = (0..self.cfg.power as usize)
                    .fold(0, |acc, j| rh.absorb(acc, self.bucket(x, row, j)));
                rh.finish(fp, self.cfg.range)
            }
        }
    }

    /// One slot per row.
    pub fn hash_all(&self, x: &DataVector) -> Result<Vec<u64>> {
        let mut out = Vec::with_capacity(self.cfg.rows);
        self.hash_into(x, &mut out)?;
        Ok(out)
    }

    /// Like [`Hasher::hash_all`], reusing `out`'s allocation.
    pub fn hash_into(&self, x: &DataVector, out: &mut Vec<u64>) -> Result<()> {
        self.check_dim(x)?;
        out.clear();
        out.extend((0..self.cfg.rows).map(|row| self.slot_unchecked(x, row)));
        Ok(())
    }
}

/// Free-function form of [`Hasher::srp_hash`].
pub fn srp_hash(cfg: &LshConfig, x: &DataVector, row: usize) -> Result<u64> {
    Hasher::new(cfg)?.srp_hash(x, row)
}

/// Free-function form of [`Hasher::pstable_hash`].
pub fn pstable_hash(cfg: &LshConfig, x: &DataVector, row: usize) -> Result<Vec<i64>> {
    Hasher::new(cfg)?.pstable_hash(x, row)
}

pub fn hash_all(cfg: &LshConfig, x: &DataVector) -> Result<Vec<u64>> {
    Hasher::new(cfg)?.hash_all(x)
}
