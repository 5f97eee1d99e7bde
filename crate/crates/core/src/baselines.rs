//! Exact kernel density (the ground-truth oracle) and the random-sampling
//! baseline backed by a reservoir.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::kernels::KernelEval;
use crate::vectors::DataVector;

fn mean_over<F>(dataset: &[DataVector], f: F) -> Result<f64>
where
    F: Fn(&DataVector) -> Result<f64>,
{
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut sum = 0.0;
    for x in dataset {
        sum += f(x)?;
    }
    Ok(sum / dataset.len() as f64)
}

/// `(1/N) Σ k^p(x, q)`, the density every estimator targets.
pub fn exact_kde(dataset: &[DataVector], q: &DataVector, kernel: &KernelEval) -> Result<f64> {
    mean_over(dataset, |x| kernel.eval(x, q))
}

/// `(1/N) Σ k^(p/2)(x, q)`, which sets the scale of the variance bounds.
pub fn exact_kde_tilde(dataset: &[DataVector], q: &DataVector, kernel: &KernelEval) -> Result<f64> {
    let half = kernel.power as f64 / 2.0;
    mean_over(dataset, |x| kernel.eval_pow(x, q, half))
}

/// Mean slot-collision probability, i.e. what raw counters divided by N
/// estimate before any debiasing.
pub fn exact_collision_kde(
    dataset: &[DataVector],
    q: &DataVector,
    kernel: &KernelEval,
) -> Result<f64> {
    mean_over(dataset, |x| kernel.collision(x, q))
}

/// Byte cost of storing one sample: 4 bytes per dense entry, 8 per sparse
/// nonzero (index plus value, both 32-bit).
pub fn sample_bytes(x: &DataVector) -> u64 {
    if x.is_sparse() {
        8 * x.stored_len() as u64
    } else {
        4 * x.dim() as u64
    }
}

/// Uniform sample of at most `capacity` items from a stream of unknown length.
#[derive(Clone, Debug)]
pub struct SampleSet {
    capacity: usize,
    samples: Vec<DataVector>,
    stream_count: u64,
    seed: u64,
    rng: ChaCha8Rng,
}

impl SampleSet {
    pub fn new(capacity: usize, seed: u64) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::InvalidConfig(
                "reservoir capacity must be positive".into(),
            ));
        }
        Ok(Self {
            capacity,
            samples: Vec::with_capacity(capacity.min(1 << 16)),
            stream_count: 0,
            seed,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    pub fn add(&mut self, x: &DataVector) {
        self.stream_count += 1;
        if self.samples.len() < self.capacity {
            self.samples.push(x.clone());
        } else {
            let j = self.rng.gen_range(0..self.stream_count);
            if (j as usize) < self.capacity {
                self.samples[j as usize] = x.clone();
            }
        }
    }

    pub fn samples(&self) -> &[DataVector] {
        &self.samples
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn stream_count(&self) -> u64 {
        self.stream_count
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Exact KDE over the retained samples, all weighted equally.
    pub fn estimate(&self, q: &DataVector, kernel: &KernelEval) -> Result<f64> {
        if self.samples.is_empty() {
            return Err(Error::EmptySketch);
        }
        exact_kde(&self.samples, q, kernel)
    }

    pub fn memory_bytes(&self) -> u64 {
        self.samples.iter().map(sample_bytes).sum()
    }
}

pub fn reservoir_add(set: &mut SampleSet, x: &DataVector) {
    set.add(x)
}

pub fn rs_estimate(set: &SampleSet, q: &DataVector, kernel: &KernelEval) -> Result<f64> {
    set.estimate(q, kernel)
}
