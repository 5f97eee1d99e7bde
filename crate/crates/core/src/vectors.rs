//! Dense and sparse real vectors and the metrics the hash families and
//! oracles are built on.
//!
//! Sparse vectors keep strictly increasing 0-based indices with nonzero
//! values; dense vectors hold exactly `dim` entries. Every operation here is a
//! pure function of its inputs.

use std::cmp::Ordering;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
enum Entries {
    Dense(Vec<f64>),
    Sparse {
        indices: Vec<usize>,
        values: Vec<f64>,
    },
}

/// A real vector of fixed dimension, stored densely or sparsely.
#[derive(Clone, Debug, PartialEq)]
pub struct DataVector {
    dim: usize,
    entries: Entries,
}

impl DataVector {
    pub fn dense(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidVector("dimension must be positive".into()));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidVector(format!("entry {i} is not finite")));
        }
        Ok(Self {
            dim: values.len(),
            entries: Entries::Dense(values),
        })
    }

    /// Builds a sparse vector from `(index, value)` pairs with 0-based indices.
    ///
    /// Indices must be strictly increasing and below `dim`. Explicit zeros are
    /// dropped so the stored values are always nonzero.
    pub fn sparse(dim: usize, pairs: impl IntoIterator<Item = (usize, f64)>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidVector("dimension must be positive".into()));
        }
        let mut indices = Vec::new();
        let mut values = Vec::new();
        let mut last: Option<usize> = None;
        for (idx, val) in pairs {
            if idx >= dim {
                return Err(Error::InvalidVector(format!(
                    "index {idx} out of range for dimension {dim}"
                )));
            }
            if last.is_some_and(|prev| idx <= prev) {
                return Err(Error::InvalidVector(format!(
                    "indices must be strictly increasing (saw {idx} after {})",
                    last.unwrap()
                )));
            }
            if !val.is_finite() {
                return Err(Error::InvalidVector(format!("entry {idx} is not finite")));
            }
            last = Some(idx);
            if val != 0.0 {
                indices.push(idx);
                values.push(val);
            }
        }
        Ok(Self {
            dim,
            entries: Entries::Sparse { indices, values },
        })
    }

    pub fn zeros(dim: usize) -> Result<Self> {
        Self::dense(vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_sparse(&self) -> bool {
        matches!(self.entries, Entries::Sparse { .. })
    }

    /// Number of stored entries: `dim` for dense vectors, nonzeros for sparse.
    pub fn stored_len(&self) -> usize {
        match &self.entries {
            Entries::Dense(v) => v.len(),
            Entries::Sparse { values, .. } => values.len(),
        }
    }

    /// Dense entries, if this vector is dense.
    pub fn as_dense(&self) -> Option<&[f64]> {
        match &self.entries {
            Entries::Dense(v) => Some(v),
            Entries::Sparse { .. } => None,
        }
    }

    /// Iterates stored `(index, value)` pairs in index order. Dense vectors
    /// yield every coordinate, including zeros.
    pub fn iter_stored(&self) -> Box<dyn Iterator<Item = (usize, f64)> + '_> {
        match &self.entries {
            Entries::Dense(v) => Box::new(v.iter().copied().enumerate()),
            Entries::Sparse { indices, values } => {
                Box::new(indices.iter().copied().zip(values.iter().copied()))
            }
        }
    }

    pub fn to_dense(&self) -> DataVector {
        match &self.entries {
            Entries::Dense(_) => self.clone(),
            Entries::Sparse { indices, values } => {
                let mut out = vec![0.0; self.dim];
                for (&i, &v) in indices.iter().zip(values) {
                    out[i] = v;
                }
                DataVector {
                    dim: self.dim,
                    entries: Entries::Dense(out),
                }
            }
        }
    }

    pub fn to_sparse(&self) -> DataVector {
        match &self.entries {
            Entries::Sparse { .. } => self.clone(),
            Entries::Dense(v) => {
                let (indices, values) = v
                    .iter()
                    .enumerate()
                    .filter(|(_, x)| **x != 0.0)
                    .map(|(i, x)| (i, *x))
                    .unzip();
                DataVector {
                    dim: self.dim,
                    entries: Entries::Sparse { indices, values },
                }
            }
        }
    }

    pub fn scaled(&self, factor: f64) -> DataVector {
        let entries = match &self.entries {
            Entries::Dense(v) => Entries::Dense(v.iter().map(|x| x * factor).collect()),
            Entries::Sparse { indices, values } => {
                if factor == 0.0 {
                    Entries::Sparse {
                        indices: Vec::new(),
                        values: Vec::new(),
                    }
                } else {
                    Entries::Sparse {
                        indices: indices.clone(),
                        values: values.iter().map(|x| x * factor).collect(),
                    }
                }
            }
        };
        DataVector {
            dim: self.dim,
            entries,
        }
    }

    pub fn norm(&self) -> f64 {
        self.iter_stored().map(|(_, v)| v * v).sum::<f64>().sqrt()
    }
}

fn check_dims(x: &DataVector, y: &DataVector) -> Result<()> {
    if x.dim != y.dim {
        return Err(Error::DimensionMismatch {
            expected: x.dim,
            actual: y.dim,
        });
    }
    Ok(())
}

/// Sums `f(a, b)` over the union of coordinates where either vector is
/// stored, with `f(0, 0)` assumed to be zero.
fn fold_pairs(x: &DataVector, y: &DataVector, f: impl Fn(f64, f64) -> f64) -> f64 {
    match (&x.entries, &y.entries) {
        (Entries::Dense(a), Entries::Dense(b)) => a.iter().zip(b).map(|(&u, &v)| f(u, v)).sum(),
        (Entries::Dense(a), Entries::Sparse { indices, values }) => {
            dense_sparse(a, indices, values, &f)
        }
        (Entries::Sparse { indices, values }, Entries::Dense(b)) => {
            dense_sparse(b, indices, values, |d, s| f(s, d))
        }
        (
            Entries::Sparse {
                indices: ia,
                values: va,
            },
            Entries::Sparse {
                indices: ib,
                values: vb,
            },
        ) => {
            let (mut i, mut j) = (0, 0);
            let mut acc = 0.0;
            while i < ia.len() || j < ib.len() {
                let ord = match (ia.get(i), ib.get(j)) {
                    (Some(a), Some(b)) => a.cmp(b),
                    (Some(_), None) => Ordering::Less,
                    _ => Ordering::Greater,
                };
                match ord {
                    Ordering::Less => {
                        acc += f(va[i], 0.0);
                        i += 1;
                    }
                    Ordering::Greater => {
                        acc += f(0.0, vb[j]);
                        j += 1;
                    }
                    Ordering::Equal => {
                        acc += f(va[i], vb[j]);
                        i += 1;
                        j += 1;
                    }
                }
            }
            acc
        }
    }
}

fn dense_sparse(
    dense: &[f64],
    indices: &[usize],
    values: &[f64],
    f: impl Fn(f64, f64) -> f64,
) -> f64 {
    let mut k = 0;
    let mut acc = 0.0;
    for (i, &d) in dense.iter().enumerate() {
        let s = if k < indices.len() && indices[k] == i {
            k += 1;
            values[k - 1]
        } else {
            0.0
        };
        acc += f(d, s);
    }
    acc
}

pub fn dot(x: &DataVector, y: &DataVector) -> Result<f64> {
    check_dims(x, y)?;
    Ok(fold_pairs(x, y, |a, b| a * b))
}

pub fn l1_distance(x: &DataVector, y: &DataVector) -> Result<f64> {
    check_dims(x, y)?;
    Ok(fold_pairs(x, y, |a, b| (a - b).abs()))
}

pub fn l2_distance(x: &DataVector, y: &DataVector) -> Result<f64> {
    check_dims(x, y)?;
    Ok(fold_pairs(x, y, |a, b| (a - b) * (a - b)).sqrt())
}

/// Angle between two nonzero vectors, in `[0, π]`.
pub fn angle(x: &DataVector, y: &DataVector) -> Result<f64> {
    check_dims(x, y)?;
    let (nx, ny) = (x.norm(), y.norm());
    if nx == 0.0 || ny == 0.0 {
        return Err(Error::ZeroVector);
    }
    let cos = fold_pairs(x, y, |a, b| a * b) / (nx * ny);
    Ok(cos.clamp(-1.0, 1.0).acos())
}
