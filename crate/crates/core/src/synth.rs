//! Seeded synthetic datasets for examples, tests, and evaluation runs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::vectors::DataVector;

/// Gaussian mixture with isotropic clusters.
#[derive(Clone, Debug)]
pub struct ClusterSpec {
    pub points: usize,
    pub dim: usize,
    pub clusters: usize,
    /// Standard deviation of each center coordinate around the origin.
    pub center_scale: f64,
    /// Standard deviation of points around their center.
    pub spread: f64,
    pub seed: u64,
}

/// Points assigned round-robin to `clusters` random centers.
pub fn clustered_gaussian(spec: &ClusterSpec) -> Vec<DataVector> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let centers: Vec<Vec<f64>> = (0..spec.clusters.max(1))
        .map(|_| gaussian_vec(&mut rng, spec.dim, spec.center_scale))
        .collect();
    let noise = Normal::new(0.0, spec.spread).expect("spread must be finite and non-negative");
    (0..spec.points)
        .map(|i| {
            let c = &centers[i % centers.len()];
            let v = c.iter().map(|m| m + noise.sample(&mut rng)).collect();
            DataVector::dense(v).expect("dimension must be positive")
        })
        .collect()
}

/// `n` queries, each a random dataset point perturbed by Gaussian noise.
pub fn perturbed_queries(data: &[DataVector], n: usize, jitter: f64, seed: u64) -> Vec<DataVector> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, jitter).expect("jitter must be finite and non-negative");
    (0..n)
        .map(|_| {
            let base = data[rng.gen_range(0..data.len())].to_dense();
            let v = base
                .as_dense()
                .unwrap()
                .iter()
                .map(|x| x + noise.sample(&mut rng))
                .collect();
            DataVector::dense(v).unwrap()
        })
        .collect()
}

fn gaussian_vec(rng: &mut ChaCha8Rng, dim: usize, scale: f64) -> Vec<f64> {
    let normal = Normal::new(0.0, scale).expect("scale must be finite and non-negative");
    (0..dim).map(|_| normal.sample(rng)).collect()
}
