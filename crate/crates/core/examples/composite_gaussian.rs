//! Estimating a Gaussian-kernel density, which no LSH family produces
//! directly, as a fitted combination of powers of the Euclidean LSH kernel.
//!
//! `cargo run --example composite_gaussian`

use race_kde::composite::{composite_estimate, fit_coefficients, CompositeModel};
use race_kde::eval::build_race;
use race_kde::synth::{clustered_gaussian, perturbed_queries, ClusterSpec};
use race_kde::vectors::l2_distance;
use race_kde::{KernelEval, LshConfig, LshKind, Storage};

fn main() -> race_kde::Result<()> {
    let s = 1.0;
    let gaussian = |c: f64| (-c * c / (2.0 * s * s)).exp();

    let base = KernelEval::new(LshKind::L2, 3.0 * s, 1, Some(1 << 32))?;
    let grid: Vec<f64> = (0..64).map(|i| 3.0 * s * i as f64 / 63.0).collect();
    let powers = [1, 2, 3, 4, 5, 6];
    let model = fit_coefficients(gaussian, &base, &powers, &grid, 1e-4)?;
    println!(
        "coefficients {:.3?}, max grid error {:.4}",
        model.coefficients, model.fit_residual
    );
    assert_eq!(CompositeModel::from_text(&model.to_text())?, model);

    let data = clustered_gaussian(&ClusterSpec {
        points: 500,
        dim: 4,
        clusters: 2,
        center_scale: 0.5,
        spread: 0.5,
        seed: 8,
    });
    // One sketch per power, sharing everything else.
    let sketches = powers
        .iter()
        .map(|&p| {
            let cfg = LshConfig::pstable(LshKind::L2, 4, 3.0 * s, p, 2000, 1 << 32, 21)?;
            Ok(build_race(&cfg, Some(Storage::Sparse), &data)?.0)
        })
        .collect::<race_kde::Result<Vec<_>>>()?;

    for q in perturbed_queries(&data, 5, 0.2, 9) {
        let exact = data
            .iter()
            .map(|x| l2_distance(x, &q).map(gaussian))
            .sum::<race_kde::Result<f64>>()?
            / data.len() as f64;
        let est = composite_estimate(&sketches, &model, &q, 9)?;
        println!("gaussian kde {exact:.4}  composite {est:.4}");
    }
    Ok(())
}
