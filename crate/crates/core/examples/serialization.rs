//! Writing a sketch to disk and reading it back; corruption is detected.
//!
//! `cargo run --example serialization`

use race_kde::{DataVector, Error, LshConfig, RaceSketch};

fn main() -> race_kde::Result<()> {
    let cfg = LshConfig::srp(3, 4, 64, 2024)?;
    let mut sketch = RaceSketch::new(cfg)?;
    for i in 0..500 {
        let t = i as f64;
        sketch.add(&DataVector::dense(vec![t.sin(), t.cos(), 0.3])?)?;
    }

    let path = std::env::temp_dir().join("race_example.sketch");
    sketch.serialize(std::fs::File::create(&path)?)?;
    let bytes = std::fs::read(&path)?;
    println!(
        "{} bytes on disk, memory_bytes() = {}",
        bytes.len(),
        sketch.memory_bytes()
    );

    let back = RaceSketch::deserialize(std::fs::File::open(&path)?)?;
    assert_eq!(back, sketch);

    let mut damaged = bytes.clone();
    damaged[100] ^= 0x10;
    match RaceSketch::from_bytes(&damaged) {
        Err(Error::ChecksumMismatch { .. }) => println!("flipped bit detected"),
        other => panic!("unexpected: {other:?}"),
    }
    std::fs::remove_file(path)?;
    Ok(())
}
