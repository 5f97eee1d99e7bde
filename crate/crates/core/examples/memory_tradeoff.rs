//! Tiny rehash ranges need more rows but far less memory: R=3 against
//! R=4000 at similar error.
//!
//! `cargo run --release --example memory_tradeoff`

use std::time::Instant;

use race_kde::baselines::exact_kde;
use race_kde::eval::build_race;
use race_kde::synth::{clustered_gaussian, perturbed_queries, ClusterSpec};
use race_kde::{KernelEval, LshConfig, LshKind, Storage};

fn main() -> race_kde::Result<()> {
    let dim = 10;
    let data = clustered_gaussian(&ClusterSpec {
        points: 50_000,
        dim,
        clusters: 100,
        center_scale: 1.0,
        spread: 0.5,
        seed: 71,
    });
    let queries = perturbed_queries(&data, 30, 0.2, 72);
    let sigma = 7.0;

    for (range, rows) in [(3, 10_000), (4000, 2000)] {
        let start = Instant::now();
        let cfg = LshConfig::pstable(LshKind::L2, dim, sigma, 1, rows, range, 1)?;
        let (sketch, hasher) = build_race(&cfg, Some(Storage::Dense), &data)?;
        let kernel = KernelEval::from_config(&cfg);
        let mut err = 0.0;
        for q in &queries {
            let exact = exact_kde(&data, q, &kernel)?;
            err += ((sketch.estimate_with(&hasher, q, 9)?.value - exact) / exact).abs();
        }
        println!(
            "R={range:4} L={rows:5}: {:9} bytes, mean |rel_error| {:.3}%, {:.1}s",
            sketch.memory_bytes(),
            100.0 * err / queries.len() as f64,
            start.elapsed().as_secs_f64()
        );
    }
    Ok(())
}
