//! Streaming kernel density estimation with RACE sketches.
//!
//! A [`RaceSketch`] compresses a stream of vectors into `L x R` integer
//! counters indexed by locality-sensitive hashes. For any query it estimates
//! the mean LSH-kernel similarity between the query and the stream. Sketches
//! support deletion, merge exactly, and serialize to a compact binary format.
//!
//! ```
//! use race_kde::{DataVector, LshConfig, LshKind, RaceSketch};
//!
//! let cfg = LshConfig::pstable(LshKind::L2, 2, 1.0, 1, 99, 64, 42).unwrap();
//! let mut sketch = RaceSketch::new(cfg).unwrap();
//! for i in 0..100 {
//!     let x = DataVector::dense(vec![i as f64 * 0.01, 0.0]).unwrap();
//!     sketch.add(&x).unwrap();
//! }
//! let q = DataVector::dense(vec![0.5, 0.0]).unwrap();
//! let est = sketch.estimate(&q, 9).unwrap();
//! assert!(est.value > 0.3 && est.value < 1.1);
//! ```

pub mod baselines;
pub mod cli;
pub mod composite;
pub mod error;
pub mod eval;
pub mod io;
pub mod kernels;
pub mod lsh;
pub mod sketch;
pub mod synth;
pub mod vectors;

pub use baselines::{exact_kde, exact_kde_tilde, SampleSet};
pub use composite::{composite_estimate, fit_coefficients, CompositeModel};
pub use error::{Error, Result};
pub use kernels::KernelEval;
pub use lsh::{Hasher, LshConfig, LshKind};
pub use sketch::{KdeEstimate, RaceSketch, Storage};
pub use vectors::DataVector;
