//! Arbitrary radial kernels as linear combinations of LSH-kernel powers.
//!
//! A target kernel `f(c)` is approximated by `Σ_p w_p k(c)^p`, where `k` is
//! the base LSH kernel. The weights come from ridge regression over a grid of
//! distances. Each power is estimated by its own RACE sketch, and the
//! composite estimate is the same weighted sum of those estimates.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::kernels::KernelEval;
use crate::lsh::LshKind;
use crate::sketch::RaceSketch;
use crate::vectors::DataVector;

const TEXT_HEADER: &str = "race-composite v1";

/// Number of distances in [`default_grid`].
pub const DEFAULT_GRID_POINTS: usize = 64;

#[derive(Clone, Debug, PartialEq)]
pub struct CompositeModel {
    /// Base kernel at power 1.
    pub base: KernelEval,
    pub powers: Vec<u32>,
    pub coefficients: Vec<f64>,
    pub fit_grid: Vec<f64>,
    /// Largest `|target - model|` over the grid.
    pub fit_residual: f64,
    pub ridge: f64,
}

impl CompositeModel {
    /// Model value `Σ w_p k(c)^p` at distance `c`.
    pub fn eval_at(&self, c: f64) -> Result<f64> {
        let k = self.base.base_at(c)?;
        Ok(self
            .powers
            .iter()
            .zip(&self.coefficients)
            .map(|(&p, &w)| w * k.powi(p as i32))
            .sum())
    }

    pub fn coefficient_norm(&self) -> f64 {
        self.coefficients.iter().map(|w| w * w).sum::<f64>().sqrt()
    }

    /// Exact kernel value of the model between two vectors.
    pub fn eval(&self, x: &DataVector, y: &DataVector) -> Result<f64> {
        self.eval_at(self.base.distance(x, y)?)
    }

    pub fn to_text(&self) -> String {
        let join = |v: &mut dyn Iterator<Item = String>| v.collect::<Vec<_>>().join(",");
        let mut out = String::new();
        writeln!(out, "{TEXT_HEADER}").unwrap();
        writeln!(out, "kind={}", self.base.kind).unwrap();
        writeln!(out, "sigma={}", self.base.sigma).unwrap();
        match self.base.rehash_range {
            Some(r) => writeln!(out, "rehash_range={r}").unwrap(),
            None => writeln!(out, "rehash_range=none").unwrap(),
        }
        writeln!(
            out,
            "powers={}",
            join(&mut self.powers.iter().map(|p| p.to_string()))
        )
        .unwrap();
        writeln!(
            out,
            "coefficients={}",
            join(&mut self.coefficients.iter().map(|w| w.to_string()))
        )
        .unwrap();
        writeln!(out, "ridge={}", self.ridge).unwrap();
        writeln!(out, "fit_residual={}", self.fit_residual).unwrap();
        writeln!(
            out,
            "grid={}",
            join(&mut self.fit_grid.iter().map(|c| c.to_string()))
        )
        .unwrap();
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let bad = |msg: String| Error::Composite(msg);
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        if lines.next().map(str::trim) != Some(TEXT_HEADER) {
            return Err(bad("missing header line".into()));
        }
        let mut fields = std::collections::HashMap::new();
        for line in lines {
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| bad(format!("malformed line `{line}`")))?;
            fields.insert(k.trim(), v.trim());
        }
        let get = |k: &str| {
            fields
                .get(k)
                .copied()
                .ok_or_else(|| bad(format!("missing `{k}`")))
        };
        fn list<T: std::str::FromStr>(s: &str) -> std::result::Result<Vec<T>, T::Err> {
            if s.is_empty() {
                return Ok(Vec::new());
            }
            s.split(',').map(|t| t.trim().parse()).collect()
        }
        let float =
            |k: &str| -> Result<f64> { get(k)?.parse().map_err(|e| bad(format!("`{k}`: {e}"))) };
        let kind: LshKind = get("kind")?.parse()?;
        let rehash_range = match get("rehash_range")? {
            "none" => None,
            r => Some(r.parse().map_err(|e| bad(format!("`rehash_range`: {e}")))?),
        };
        let base = KernelEval::new(kind, float("sigma")?, 1, rehash_range)?;
        let powers: Vec<u32> = list(get("powers")?).map_err(|e| bad(format!("`powers`: {e}")))?;
        let coefficients: Vec<f64> =
            list(get("coefficients")?).map_err(|e| bad(format!("`coefficients`: {e}")))?;
        if powers.len() != coefficients.len() {
            return Err(bad("powers and coefficients differ in length".into()));
        }
        Ok(Self {
            base,
            powers,
            coefficients,
            fit_grid: list(get("grid")?).map_err(|e| bad(format!("`grid`: {e}")))?,
            fit_residual: float("fit_residual")?,
            ridge: float("ridge")?,
        })
    }
}

/// Ridge fit of `target` by powers of `base` over `grid`:
/// minimizes `Σ_c (target(c) - Σ_p w_p base(c)^p)^2 + λ ||w||^2`.
pub fn fit_coefficients<F>(
    target: F,
    base: &KernelEval,
    powers: &[u32],
    grid: &[f64],
    lambda: f64,
) -> Result<CompositeModel>
where
    F: Fn(f64) -> f64,
{
    if grid.is_empty() {
        return Err(Error::Composite("distance grid is empty".into()));
    }
    if powers.is_empty() || powers.contains(&0) {
        return Err(Error::Composite(
            "powers must be a nonempty set of positive integers".into(),
        ));
    }
    if grid.iter().any(|c| !(c.is_finite() && *c >= 0.0)) {
        return Err(Error::Composite(
            "grid distances must be finite and non-negative".into(),
        ));
    }
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(Error::Composite(format!(
            "ridge must be non-negative, got {lambda}"
        )));
    }
    let mut sorted = powers.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if lambda == 0.0 && sorted.len() != powers.len() {
        return Err(Error::Singular("duplicated powers without ridge".into()));
    }
    let base = base.with_power(1);

    let ks = grid
        .iter()
        .map(|&c| base.base_at(c))
        .collect::<Result<Vec<_>>>()?;
    let design = DMatrix::from_fn(grid.len(), powers.len(), |i, j| {
        ks[i].powi(powers[j] as i32)
    });
    let y = DVector::from_iterator(grid.len(), grid.iter().map(|&c| target(c)));
    let gram =
        design.transpose() * &design + DMatrix::identity(powers.len(), powers.len()) * lambda;
    let rhs = design.transpose() * y;
    let w = gram
        .clone()
        .cholesky()
        .map(|ch| ch.solve(&rhs))
        .or_else(|| gram.lu().solve(&rhs))
        .ok_or_else(|| Error::Singular("normal equations are not invertible".into()))?;
    if w.iter().any(|v| !v.is_finite()) {
        return Err(Error::Singular(
            "normal equations are ill-conditioned".into(),
        ));
    }

    let mut model = CompositeModel {
        base,
        powers: powers.to_vec(),
        coefficients: w.iter().copied().collect(),
        fit_grid: grid.to_vec(),
        fit_residual: 0.0,
        ridge: lambda,
    };
    let mut residual = 0.0f64;
    for &c in grid {
        residual = residual.max((target(c) - model.eval_at(c)?).abs());
    }
    model.fit_residual = residual;
    Ok(model)
}

/// 64 log-spaced distances spanning where `base` falls from 0.99 to 0.01.
pub fn default_grid(base: &KernelEval) -> Result<Vec<f64>> {
    let base = base.with_power(1);
    let (lo, hi) = match base.kind {
        LshKind::Srp => (0.01 * std::f64::consts::PI, 0.99 * std::f64::consts::PI),
        _ => (level_crossing(&base, 0.99)?, level_crossing(&base, 0.01)?),
    };
    let n = DEFAULT_GRID_POINTS;
    let (a, b) = (lo.ln(), hi.ln());
    Ok((0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .collect())
}

/// Distance at which a decreasing base kernel equals `level`.
fn level_crossing(base: &KernelEval, level: f64) -> Result<f64> {
    let mut hi = base.sigma;
    while base.base_at(hi)? > level {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if base.base_at(mid)? > level {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `Σ_p w_p · estimate(sketch_p, q)`, one sketch per power of the model.
///
/// The sketches must share kind, dim, sigma, rows, range, and seed, and be
/// built from the same stream.
pub fn composite_estimate(
    sketches: &[RaceSketch],
    model: &CompositeModel,
    q: &DataVector,
    groups: usize,
) -> Result<f64> {
    let first = sketches
        .first()
        .ok_or_else(|| Error::Composite("no sketches supplied".into()))?
        .config();
    for s in sketches {
        let c = s.config();
        if c.kind != first.kind
            || c.dim != first.dim
            || c.sigma.to_bits() != first.sigma.to_bits()
            || c.rows != first.rows
            || c.range != first.range
            || c.seed != first.seed
            || s.items() != sketches[0].items()
        {
            return Err(Error::Composite("sketch configs drift beyond power".into()));
        }
    }
    if first.kind != model.base.kind
        || (first.kind != LshKind::Srp && first.sigma != model.base.sigma)
    {
        return Err(Error::Composite(
            "sketches do not match the model's base kernel".into(),
        ));
    }
    let mut total = 0.0;
    for (&p, &w) in model.powers.iter().zip(&model.coefficients) {
        let sketch = sketches
            .iter()
            .find(|s| s.config().power == p)
            .ok_or_else(|| Error::Composite(format!("missing sketch for power {p}")))?;
        total += w * sketch.estimate(q, groups)?.value;
    }
    Ok(total)
}
