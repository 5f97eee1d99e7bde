//! High-dimensional sparse input in the `label index:value` text format,
//! with sparse counter storage.
//!
//! `cargo run --example sparse_input`

use race_kde::io::read_sparse;
use race_kde::{LshConfig, LshKind, RaceSketch, Storage};

const DATA: &str = "\
+1 3:1 17:0.5 90000:2
-1 3:1 18:0.5
+1 4:-1 90001:1.5
# comments and blank lines are skipped

+1 3:0.9 17:0.6 90000:2.1
";

fn main() -> race_kde::Result<()> {
    let dim = 100_000;
    let data = read_sparse(DATA.as_bytes(), dim).collect::<race_kde::Result<Vec<_>>>()?;

    // A huge rehash range is only affordable with sparse rows.
    let cfg = LshConfig::pstable(LshKind::L2, dim, 1.0, 1, 200, 1 << 40, 5)?;
    let mut sketch = RaceSketch::new(cfg)?;
    assert_eq!(sketch.storage(), Storage::Sparse);
    for x in &data {
        sketch.add(x)?;
    }
    println!(
        "{} vectors, {} bytes, {} nonzero counters",
        sketch.items(),
        sketch.memory_bytes(),
        sketch.nonzero_counters()
    );
    for (i, q) in data.iter().enumerate() {
        println!("query {i}: {:.3}", sketch.estimate(q, 9)?.value);
    }
    Ok(())
}
