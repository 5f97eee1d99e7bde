//! RACE against a uniform reservoir sample at equal byte budgets. RACE
//! wins while the sample holds only a handful of points.
//!
//! `cargo run --release --example reservoir_baseline`

use race_kde::eval::{run_eval, EvalPlan, Method};
use race_kde::synth::{clustered_gaussian, perturbed_queries, ClusterSpec};
use race_kde::LshKind;

fn main() -> race_kde::Result<()> {
    let dim = 500;
    let data = clustered_gaussian(&ClusterSpec {
        points: 5000,
        dim,
        clusters: 4,
        center_scale: 1.0,
        spread: 0.3,
        seed: 1,
    });
    let queries = perturbed_queries(&data, 30, 0.05, 2);
    let sample = 4 * dim as u64;
    let plan = EvalPlan {
        kind: LshKind::L2,
        sigma: 8.0,
        power: 1,
        range: 32,
        methods: vec![Method::Race, Method::Rs],
        sizes: vec![5 * sample, 10 * sample, 20 * sample, 40 * sample],
        repeats: 1,
        seed: 3,
        groups: 9,
        storage: None,
    };
    let records = run_eval(&plan, &data, &queries)?;
    println!("{:>8} {:>10} {:>10}", "bytes", "race", "rs");
    for &budget in &plan.sizes {
        let tag = format!("budget={budget};");
        let err = |m: &str| {
            let e: Vec<f64> = records
                .iter()
                .filter(|r| r.method == m && r.params.contains(&tag))
                .filter_map(|r| r.rel_error)
                .map(f64::abs)
                .collect();
            e.iter().sum::<f64>() / e.len() as f64
        };
        println!("{budget:8} {:10.4} {:10.4}", err("race"), err("rs"));
    }
    Ok(())
}
