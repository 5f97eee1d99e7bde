//! Sketches built separately from the same config merge into exactly the
//! sketch of the combined stream.
//!
//! `cargo run --example merge_streams`

use race_kde::synth::{clustered_gaussian, ClusterSpec};
use race_kde::{LshConfig, LshKind, RaceSketch};

fn main() -> race_kde::Result<()> {
    let data = clustered_gaussian(&ClusterSpec {
        points: 3000,
        dim: 5,
        clusters: 3,
        center_scale: 2.0,
        spread: 0.5,
        seed: 11,
    });
    let cfg = LshConfig::pstable(LshKind::L1, 5, 3.0, 2, 400, 1 << 20, 99)?;

    // Three "workers", each seeing a third of the stream.
    let mut shards = Vec::new();
    for chunk in data.chunks(1000) {
        let mut s = RaceSketch::new(cfg)?;
        for x in chunk {
            s.add(x)?;
        }
        shards.push(s);
    }
    let mut merged = RaceSketch::new(cfg)?;
    for s in &shards {
        merged.merge_from(s)?;
    }

    let mut single = RaceSketch::new(cfg)?;
    for x in &data {
        single.add(x)?;
    }
    println!(
        "merged {} items into {} bytes ({:?} storage); identical to one pass: {}",
        merged.items(),
        merged.memory_bytes(),
        merged.storage(),
        merged.to_bytes() == single.to_bytes()
    );

    // A different seed means different hash functions: merging is refused.
    let other = RaceSketch::new(cfg.with_seed(100))?;
    match merged.merge(&other) {
        Err(e) => println!("refused: {e}"),
        Ok(_) => unreachable!(),
    }
    Ok(())
}
