//! A sliding window over a stream: each point is added on arrival and
//! removed when it leaves the window.
//!
//! `cargo run --example deletion`

use std::collections::VecDeque;

use race_kde::baselines::exact_kde;
use race_kde::{DataVector, Hasher, KernelEval, LshConfig, LshKind, RaceSketch};

fn main() -> race_kde::Result<()> {
    let cfg = LshConfig::pstable(LshKind::L2, 2, 1.0, 1, 600, 256, 5)?;
    let hasher = Hasher::materialized(&cfg)?;
    let kernel = KernelEval::from_config(&cfg);
    let mut sketch = RaceSketch::new(cfg)?;
    let mut window = VecDeque::new();
    let width = 200;

    // A point drifting around a circle; density follows it.
    let probe = DataVector::dense(vec![1.0, 0.0])?;
    for t in 0..1000 {
        let a = t as f64 * 0.01;
        let x = DataVector::dense(vec![a.cos() + 0.05 * (t % 7) as f64, a.sin()])?;
        sketch.add_with(&hasher, &x)?;
        window.push_back(x);
        if window.len() > width {
            let old = window.pop_front().unwrap();
            sketch.remove_with(&hasher, &old)?;
        }
        if t % 200 == 199 {
            let w: Vec<_> = window.iter().cloned().collect();
            let est = sketch.estimate_with(&hasher, &probe, 9)?.value;
            println!(
                "t={t:4}: items={} density at (1,0): race {est:.4}, exact {:.4}",
                sketch.items(),
                exact_kde(&w, &probe, &kernel)?
            );
        }
    }

    // Removing something never added is an error, and the sketch is untouched.
    let before = sketch.clone();
    let stranger = DataVector::dense(vec![50.0, -50.0])?;
    println!("unmatched removal: {:?}", sketch.remove(&stranger).err());
    assert_eq!(before, sketch);
    Ok(())
}
