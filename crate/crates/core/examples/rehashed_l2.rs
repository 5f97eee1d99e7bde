//! Euclidean LSH kernel with rehashing into a small range.
//!
//! The debiased estimator removes the `1/R` floor that rehashing adds; a
//! small range adds variance, a large one costs memory.
//!
//! `cargo run --example rehashed_l2`

use race_kde::baselines::exact_kde;
use race_kde::eval::build_race;
use race_kde::synth::{clustered_gaussian, perturbed_queries, ClusterSpec};
use race_kde::{KernelEval, LshConfig, LshKind};

fn main() -> race_kde::Result<()> {
    let data = clustered_gaussian(&ClusterSpec {
        points: 5000,
        dim: 8,
        clusters: 10,
        center_scale: 1.0,
        spread: 0.3,
        seed: 3,
    });
    let queries = perturbed_queries(&data, 20, 0.1, 4);
    let sigma = 2.0;

    for range in [4, 64, 4096] {
        let cfg = LshConfig::pstable(LshKind::L2, 8, sigma, 1, 1500, range, 7)?;
        let (sketch, hasher) = build_race(&cfg, None, &data)?;
        let kernel = KernelEval::from_config(&cfg);
        let mut err = 0.0;
        for q in &queries {
            let exact = exact_kde(&data, q, &kernel)?;
            let est = sketch.estimate_with(&hasher, q, 9)?;
            err += ((est.clamped() - exact) / exact).abs();
        }
        println!(
            "R={range:5}: {:9} bytes, mean |rel_error| {:.4}",
            sketch.memory_bytes(),
            err / queries.len() as f64
        );
    }
    Ok(())
}
