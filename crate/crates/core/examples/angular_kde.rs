//! Angular-kernel density with a signed-random-projection sketch.
//!
//! `cargo run --example angular_kde`

use race_kde::baselines::exact_kde;
use race_kde::synth::{clustered_gaussian, perturbed_queries, ClusterSpec};
use race_kde::{Hasher, KernelEval, LshConfig, RaceSketch};

fn main() -> race_kde::Result<()> {
    let data = clustered_gaussian(&ClusterSpec {
        points: 2000,
        dim: 16,
        clusters: 4,
        center_scale: 1.0,
        spread: 0.4,
        seed: 1,
    });
    let queries = perturbed_queries(&data, 5, 0.1, 2);

    // Power 2: each row concatenates two sign bits, so 4 counters per row.
    let cfg = LshConfig::srp(16, 2, 1000, 42)?;
    let hasher = Hasher::materialized(&cfg)?;
    let mut sketch = RaceSketch::new(cfg)?;
    for x in &data {
        sketch.add_with(&hasher, x)?;
    }

    let kernel = KernelEval::from_config(&cfg);
    println!(
        "sketch: {} items, {} bytes",
        sketch.items(),
        sketch.memory_bytes()
    );
    println!("{:>8} {:>8} {:>8}", "exact", "race", "rel_err");
    for q in &queries {
        let exact = exact_kde(&data, q, &kernel)?;
        let est = sketch.estimate_with(&hasher, q, 9)?.value;
        println!("{exact:8.4} {est:8.4} {:8.4}", (est - exact) / exact);
    }
    Ok(())
}
