//! Closed-form collision probabilities of the LSH families, viewed as kernels
//! of distance, plus a Monte Carlo collision oracle that checks them.

use std::f64::consts::PI;

use statrs::function::erf::erf;

use crate::error::{Error, Result};
use crate::lsh::{Hasher, LshConfig, LshKind};
use crate::vectors::{self, DataVector};

/// SRP collision probability `1 - θ/π` at angle `theta`.
pub fn angular_collision(theta: f64) -> Result<f64> {
    if !(0.0..=PI).contains(&theta) {
        return Err(Error::OutOfRange(format!("angle {theta} not in [0, π]")));
    }
    Ok(1.0 - theta / PI)
}

fn check_distance(c: f64, sigma: f64) -> Result<()> {
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "sigma must be positive, got {sigma}"
        )));
    }
    if c.is_nan() || c < 0.0 {
        return Err(Error::OutOfRange(format!("distance {c} is negative")));
    }
    Ok(())
}

/// Collision probability of the Gaussian p-stable hash with bucket width
/// `sigma` for two points at Euclidean distance `c`.
pub fn l2_collision(c: f64, sigma: f64) -> Result<f64> {
    check_distance(c, sigma)?;
    if c == 0.0 {
        return Ok(1.0);
    }
    let r = sigma / c;
    let k = -erf(-r / 2f64.sqrt()) - 2.0 / (r * (2.0 * PI).sqrt()) * (-(-r * r / 2.0).exp_m1());
    Ok(k.clamp(0.0, 1.0))
}

/// Collision probability of the Cauchy p-stable hash with bucket width
/// `sigma` for two points at Manhattan distance `c`.
pub fn l1_collision(c: f64, sigma: f64) -> Result<f64> {
    check_distance(c, sigma)?;
    if c == 0.0 {
        return Ok(1.0);
    }
    let r = sigma / c;
    let k = 2.0 / PI * r.atan() - (r * r).ln_1p() / (PI * r);
    Ok(k.clamp(0.0, 1.0))
}

/// Collision probability of `p` concatenated independent hashes.
pub fn apply_power(k: f64, p: u32) -> f64 {
    k.powi(p as i32)
}

/// Collision probability after rehashing codes into `r` slots.
pub fn rehash_adjust(k: f64, r: u64) -> f64 {
    let r = r as f64;
    k * (r - 1.0) / r + 1.0 / r
}

/// An LSH kernel: a family, its bandwidth, the concatenation power, and (for
/// p-stable families) the rehash range.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelEval {
    pub kind: LshKind,
    pub sigma: f64,
    pub power: u32,
    pub rehash_range: Option<u64>,
}

impl KernelEval {
    pub fn new(kind: LshKind, sigma: f64, power: u32, rehash_range: Option<u64>) -> Result<Self> {
        if power == 0 {
            return Err(Error::InvalidConfig("power must be at least 1".into()));
        }
        match (kind, rehash_range) {
            (LshKind::Srp, None) => {}
            (LshKind::Srp, Some(_)) => {
                return Err(Error::InvalidConfig("SRP kernels are not rehashed".into()))
            }
            (_, None) => {
                return Err(Error::InvalidConfig(
                    "p-stable kernels need a rehash range".into(),
                ))
            }
            (_, Some(r)) if r < 2 => {
                return Err(Error::InvalidConfig(format!("rehash range {r} < 2")))
            }
            (_, Some(_)) => check_distance(0.0, sigma)?,
        }
        Ok(Self {
            kind,
            sigma,
            power,
            rehash_range,
        })
    }

    /// The kernel a sketch with this config estimates.
    pub fn from_config(cfg: &LshConfig) -> Self {
        Self {
            kind: cfg.kind,
            sigma: cfg.sigma,
            power: cfg.power,
            rehash_range: cfg.kind.is_rehashed().then_some(cfg.range),
        }
    }

    pub fn with_power(mut self, power: u32) -> Self {
        self.power = power;
        self
    }

    /// Base (power 1) kernel at distance `c`; for SRP `c` is the angle.
    pub fn base_at(&self, c: f64) -> Result<f64> {
        match self.kind {
            LshKind::Srp => angular_collision(c),
            LshKind::L2 => l2_collision(c, self.sigma),
            LshKind::L1 => l1_collision(c, self.sigma),
        }
    }

    /// The family's natural distance between two vectors.
    pub fn distance(&self, x: &DataVector, y: &DataVector) -> Result<f64> {
        match self.kind {
            LshKind::Srp => vectors::angle(x, y),
            LshKind::L2 => vectors::l2_distance(x, y),
            LshKind::L1 => vectors::l1_distance(x, y),
        }
    }

    /// `k^p(x, y)`, the kernel whose density the estimators target.
    pub fn eval(&self, x: &DataVector, y: &DataVector) -> Result<f64> {
        self.eval_pow(x, y, self.power as f64)
    }

    /// `k^e(x, y)` for a real exponent (e.g. `p/2`).
    pub fn eval_pow(&self, x: &DataVector, y: &DataVector, exponent: f64) -> Result<f64> {
        Ok(self.base_at(self.distance(x, y)?)?.powf(exponent))
    }

    /// Slot collision probability as seen by a sketch row: `k^p`, shifted by
    /// rehashing when a rehash range is set.
    pub fn collision(&self, x: &DataVector, y: &DataVector) -> Result<f64> {
        let k = self.eval(x, y)?;
        Ok(match self.rehash_range {
            Some(r) => rehash_adjust(k, r),
            None => k,
        })
    }
}

fn mc_config(cfg: &LshConfig, trials: usize) -> Result<Hasher> {
    if trials == 0 {
        return Err(Error::InvalidConfig("trials must be at least 1".into()));
    }
    Hasher::new(&cfg.with_rows(trials))
}

/// Fraction of `trials` independent rows in which the full p-concatenated
/// codes of `x` and `y` agree (before any rehashing). Estimates `k^p`.
pub fn mc_collision(cfg: &LshConfig, x: &DataVector, y: &DataVector, trials: usize) -> Result<f64> {
    let h = mc_config(cfg, trials)?;
    let mut hits = 0usize;
    for row in 0..trials {
        let same = match cfg.kind {
            LshKind::Srp => h.srp_hash(x, row)? == h.srp_hash(y, row)?,
            _ => h.pstable_hash(x, row)? == h.pstable_hash(y, row)?,
        };
        hits += usize::from(same);
    }
    Ok(hits as f64 / trials as f64)
}

/// Like [`mc_collision`] but compares the slots a sketch would use, so for
/// p-stable families the rehash shift is included.
pub fn mc_slot_collision(
    cfg: &LshConfig,
    x: &DataVector,
    y: &DataVector,
    trials: usize,
) -> Result<f64> {
    let h = mc_config(cfg, trials)?;
    let a = h.hash_all(x)?;
    let b = h.hash_all(y)?;
    let hits = a.iter().zip(&b).filter(|(s, t)| s == t).count();
    Ok(hits as f64 / trials as f64)
}
