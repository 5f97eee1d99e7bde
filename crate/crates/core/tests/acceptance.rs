//! Acceptance suite. Each criterion prints one `PASS`/`FAIL` line; the
//! process exits non-zero if any criterion fails.
//!
//! Run with `cargo test -p race-kde --test acceptance --release` for speed;
//! the test profile is optimized, so plain `cargo test` is fine too.

use std::panic::{self, AssertUnwindSafe};
use std::process::{Command, ExitCode};
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use race_kde::baselines::{exact_kde, exact_kde_tilde};
use race_kde::composite::{composite_estimate, fit_coefficients};
use race_kde::eval::{build_race, run_eval, EvalPlan, Method};
use race_kde::kernels::{
    angular_collision, apply_power, l1_collision, l2_collision, mc_collision, mc_slot_collision,
    rehash_adjust, KernelEval,
};
use race_kde::synth::{clustered_gaussian, perturbed_queries, ClusterSpec};
use race_kde::{DataVector, LshConfig, LshKind, RaceSketch, Storage};

type Outcome = (bool, String);
type Criterion = (&'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("unbiased finite-range estimator", c1_finite_unbiased),
        ("per-row variance bound", c2_variance_bound),
        ("unbiased rehashed estimator", c3_rehashed_unbiased),
        ("error scaling in L", c4_error_scaling),
        ("merge and delete exactness", c5_merge_delete),
        ("collision closed forms", c6_closed_forms),
        ("memory-computation tradeoff", c7_memory_tradeoff),
        ("RACE beats random sampling", c8_race_vs_rs),
        ("composite Gaussian kernel", c9_composite),
        ("serialization", c10_serialization),
    ];
    let filter: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let id = format!("criterion {}", i + 1);
        if !filter.is_empty() && !filter.iter().any(|f| id.ends_with(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let (ok, detail) = panic::catch_unwind(AssertUnwindSafe(run))
            .unwrap_or_else(|_| (false, "panicked".to_string()));
        let secs = start.elapsed().as_secs_f64();
        let tag = if ok { "PASS" } else { "FAIL" };
        println!("{tag} {id} ({name}): {detail} [{secs:.1}s]");
        failed += usize::from(!ok);
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Nearest-rank percentile, `q` in (0, 1].
fn percentile(v: &[f64], q: f64) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let rank = ((q * s.len() as f64).ceil() as usize).clamp(1, s.len());
    s[rank - 1]
}

fn ls_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let (mx, my) = (mean(xs), mean(ys));
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

fn kde_all(data: &[DataVector], queries: &[DataVector], k: &KernelEval) -> Vec<f64> {
    queries
        .iter()
        .map(|q| exact_kde(data, q, k).unwrap())
        .collect()
}

/// `k^p` for a p-stable family; `eval` ignores the rehash range.
fn pstable_kernel(kind: LshKind, sigma: f64, power: u32) -> KernelEval {
    KernelEval::new(kind, sigma, power, Some(u64::MAX)).unwrap()
}

/// Bandwidth at which the mean KDE over `queries` equals `target`.
fn tune_sigma(
    kind: LshKind,
    power: u32,
    data: &[DataVector],
    queries: &[DataVector],
    target: f64,
) -> f64 {
    let mean_k = |sigma: f64| {
        let k = pstable_kernel(kind, sigma, power);
        mean(&kde_all(data, queries, &k))
    };
    let (mut lo, mut hi) = (1e-3f64, 1e4f64);
    for _ in 0..50 {
        let mid = (lo * hi).sqrt();
        if mean_k(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (lo * hi).sqrt()
}

fn base_set() -> (Vec<DataVector>, Vec<DataVector>) {
    let data = clustered_gaussian(&ClusterSpec {
        points: 1000,
        dim: 20,
        clusters: 4,
        center_scale: 1.0,
        spread: 0.5,
        seed: 11,
    });
    let queries = perturbed_queries(&data, 50, 0.2, 12);
    (data, queries)
}

fn c1_finite_unbiased() -> Outcome {
    let (data, queries) = base_set();
    let rows = 5000;
    let cfg = LshConfig::srp(20, 3, rows, 101).unwrap();
    let (sketch, hasher) = build_race(&cfg, None, &data).unwrap();
    let kernel = KernelEval::from_config(&cfg);
    let mut passed = 0;
    let mut worst = 0.0f64;
    for q in &queries {
        let est = mean(&sketch.row_estimates_with(&hasher, q).unwrap());
        let k = exact_kde(&data, q, &kernel).unwrap();
        let tol = 3.0 * exact_kde_tilde(&data, q, &kernel).unwrap() / (rows as f64).sqrt();
        worst = worst.max((est - k).abs() / tol);
        passed += usize::from((est - k).abs() <= tol);
    }
    (
        passed >= 47,
        format!("{passed}/50 queries within 3 standard errors (worst at {worst:.2}x tolerance)"),
    )
}

fn c2_variance_bound() -> Outcome {
    let (data, queries) = base_set();
    let cfg = LshConfig::srp(20, 3, 5000, 101).unwrap();
    let (sketch, hasher) = build_race(&cfg, None, &data).unwrap();
    let kernel = KernelEval::from_config(&cfg);
    let n = data.len() as f64;
    let mut passed = 0;
    let mut max_ratio = 0.0f64;
    for q in &queries {
        let counts: Vec<f64> = sketch
            .raw_query_with(&hasher, q)
            .unwrap()
            .into_iter()
            .map(|c| c as f64)
            .collect();
        let m = mean(&counts);
        let var = counts.iter().map(|c| (c - m).powi(2)).sum::<f64>() / (counts.len() - 1) as f64;
        let bound = (n * exact_kde_tilde(&data, q, &kernel).unwrap()).powi(2);
        max_ratio = max_ratio.max(var / bound);
        passed += usize::from(var <= bound);
    }
    (
        passed == 50,
        format!("{passed}/50 queries under the bound (max variance/bound {max_ratio:.3})"),
    )
}

fn c3_rehashed_unbiased() -> Outcome {
    let (data, queries) = base_set();
    let sigma = tune_sigma(LshKind::L2, 1, &data, &queries, 0.3);
    let rows = 5000;
    let mut ok = true;
    let mut parts = Vec::new();
    for range in [4u64, 256] {
        let cfg = LshConfig::pstable(LshKind::L2, 20, sigma, 1, rows, range, 202).unwrap();
        let (sketch, hasher) = build_race(&cfg, None, &data).unwrap();
        let kernel = pstable_kernel(LshKind::L2, sigma, 1);
        let r = range as f64;
        let mut passed = 0;
        for q in &queries {
            let est = mean(&sketch.row_estimates_with(&hasher, q).unwrap());
            let k = exact_kde(&data, q, &kernel).unwrap();
            let kt = exact_kde_tilde(&data, q, &kernel).unwrap();
            let sd = r / (r - 1.0) * (((r - 1.0) / r).sqrt() * kt + 1.0 / r.sqrt());
            passed += usize::from((est - k).abs() <= 3.0 * sd / (rows as f64).sqrt());
        }
        ok &= passed >= 47;
        parts.push(format!("R={range}: {passed}/50"));
    }
    (ok, format!("sigma={sigma:.3}; {}", parts.join(", ")))
}

/// Relative error bound at confidence `1 - δ`: `(R/(R-1)) sqrt(ln(1/δ)/L) / K`.
fn error_budget(range: u64, rows: usize, delta: f64, k: f64) -> f64 {
    let r = range as f64;
    r / (r - 1.0) * ((1.0 / delta).ln() / rows as f64).sqrt() / k
}

fn c4_error_scaling() -> Outcome {
    let data = clustered_gaussian(&ClusterSpec {
        points: 2000,
        dim: 10,
        clusters: 5,
        center_scale: 1.0,
        spread: 0.5,
        seed: 21,
    });
    let queries = perturbed_queries(&data, 400, 0.2, 22);
    let sigma = tune_sigma(LshKind::L2, 1, &data, &queries, 0.3);
    let kernel = pstable_kernel(LshKind::L2, sigma, 1);
    let exact = kde_all(&data, &queries, &kernel);
    let range = 1024;
    let ladder = [250usize, 500, 1000, 2000, 4000];
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    let mut under = true;
    let mut parts = Vec::new();
    for (i, &rows) in ladder.iter().enumerate() {
        let cfg =
            LshConfig::pstable(LshKind::L2, 10, sigma, 1, rows, range, 300 + i as u64).unwrap();
        let (sketch, hasher) = build_race(&cfg, Some(Storage::Dense), &data).unwrap();
        let errs: Vec<f64> = queries
            .iter()
            .zip(&exact)
            .map(|(q, &k)| ((sketch.estimate_with(&hasher, q, 9).unwrap().value - k) / k).abs())
            .collect();
        let p99 = percentile(&errs, 0.99);
        let budgets: Vec<f64> = exact
            .iter()
            .map(|&k| error_budget(range, rows, 0.01, k))
            .collect();
        let bound = percentile(&budgets, 0.99);
        under &= p99 <= bound;
        xs.push((rows as f64).ln());
        ys.push(p99.ln());
        parts.push(format!("L={rows}: p99={p99:.4} bound={bound:.4}"));
    }
    let slope = ls_slope(&xs, &ys);
    (
        (slope + 0.5).abs() <= 0.15 && under,
        format!("slope {slope:.3}; {}", parts.join(", ")),
    )
}

fn random_config(rng: &mut ChaCha8Rng) -> LshConfig {
    let dim = rng.gen_range(1..8);
    let power = rng.gen_range(1..4);
    let rows = rng.gen_range(1..40);
    let seed = rng.gen();
    match rng.gen_range(0..3) {
        0 => LshConfig::srp(dim, power, rows, seed).unwrap(),
        k => {
            let kind = if k == 1 { LshKind::L2 } else { LshKind::L1 };
            let range = rng.gen_range(2..10_000);
            let sigma = rng.gen_range(0.1..5.0);
            LshConfig::pstable(kind, dim, sigma, power, rows, range, seed).unwrap()
        }
    }
}

fn random_points(rng: &mut ChaCha8Rng, n: usize, dim: usize) -> Vec<DataVector> {
    (0..n)
        .map(|_| {
            if rng.gen_bool(0.5) {
                DataVector::dense((0..dim).map(|_| rng.gen_range(-3.0..3.0)).collect()).unwrap()
            } else {
                let mut pairs = Vec::new();
                for i in 0..dim {
                    if rng.gen_bool(0.4) {
                        pairs.push((i, rng.gen_range(-3.0..3.0)));
                    }
                }
                DataVector::sparse(dim, pairs).unwrap()
            }
        })
        .collect()
}

fn c5_merge_delete() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut merge_ok = 0;
    let mut delete_ok = 0;
    let trials = 100;
    for _ in 0..trials {
        let cfg = random_config(&mut rng);
        let storage = if rng.gen_bool(0.5) {
            Storage::Dense
        } else {
            Storage::Sparse
        };
        let n = rng.gen_range(0..80);
        let data = random_points(&mut rng, n, cfg.dim);

        let mut single = RaceSketch::with_storage(cfg, storage).unwrap();
        data.iter().for_each(|x| single.add(x).unwrap());

        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng);
        let cut = rng.gen_range(0..=n);
        let mut left = RaceSketch::with_storage(cfg, storage).unwrap();
        let mut right = RaceSketch::with_storage(cfg, storage).unwrap();
        for &i in &order[..cut] {
            left.add(&data[i]).unwrap();
        }
        for &i in &order[cut..] {
            right.add(&data[i]).unwrap();
        }
        let merged = left.merge(&right).unwrap();
        merge_ok += usize::from(merged.to_bytes() == single.to_bytes());

        let extra_n = rng.gen_range(1..30);
        let extra = random_points(&mut rng, extra_n, cfg.dim);
        let mut updated = single.clone();
        extra.iter().for_each(|x| updated.add(x).unwrap());
        let mut removal = extra.clone();
        removal.shuffle(&mut rng);
        removal.iter().for_each(|x| updated.remove(x).unwrap());
        delete_ok += usize::from(updated == single && updated.to_bytes() == single.to_bytes());
    }
    (
        merge_ok == trials && delete_ok == trials,
        format!("merge identical {merge_ok}/{trials}, delete restores {delete_ok}/{trials}"),
    )
}

fn c6_closed_forms() -> Outcome {
    let trials = 100_000;
    let n = trials as f64;
    let dim = 4;
    let origin = DataVector::dense(vec![0.3, -0.2, 0.1, 0.5]).unwrap();
    // Offset along a fixed direction with unit L2 (or L1) norm.
    let shifted = |c: f64, l1: bool| {
        let dir = [0.5, -0.5, 0.5, 0.5];
        let norm: f64 = if l1 { 2.0 } else { 1.0 };
        let v = origin
            .as_dense()
            .unwrap()
            .iter()
            .zip(dir)
            .map(|(o, d)| o + c * d / norm)
            .collect();
        DataVector::dense(v).unwrap()
    };
    let mut checks = 0;
    let mut passed = 0;
    let mut worst = 0.0f64;
    let mut check = |mc: f64, expect: f64| {
        let se = (expect * (1.0 - expect) / n).sqrt().max(1.0 / n);
        let z = (mc - expect).abs() / se;
        worst = worst.max(z);
        checks += 1;
        passed += usize::from(z <= 3.0);
    };

    let srp = LshConfig::srp(dim, 1, 1, 61).unwrap();
    for theta in [0.2, 0.7, 1.2, 2.0, 2.8f64] {
        let x = DataVector::dense(vec![1.0, 0.0, 0.0, 0.0]).unwrap();
        let y = DataVector::dense(vec![theta.cos(), theta.sin(), 0.0, 0.0]).unwrap();
        check(
            mc_collision(&srp, &x, &y, trials).unwrap(),
            angular_collision(theta).unwrap(),
        );
    }
    let sigma = 1.5;
    let l2 = LshConfig::pstable(LshKind::L2, dim, sigma, 1, 1, 2, 62).unwrap();
    let l1 = LshConfig::pstable(LshKind::L1, dim, sigma, 1, 1, 2, 63).unwrap();
    let l2_cubed = LshConfig::pstable(LshKind::L2, dim, sigma, 3, 1, 2, 64).unwrap();
    let l1_rehashed = LshConfig::pstable(LshKind::L1, dim, sigma, 2, 1, 8, 65).unwrap();
    for c in [0.2, 0.7, 1.5, 3.0, 6.0] {
        let y2 = shifted(c, false);
        let y1 = shifted(c, true);
        check(
            mc_collision(&l2, &origin, &y2, trials).unwrap(),
            l2_collision(c, sigma).unwrap(),
        );
        check(
            mc_collision(&l1, &origin, &y1, trials).unwrap(),
            l1_collision(c, sigma).unwrap(),
        );
        check(
            mc_collision(&l2_cubed, &origin, &y2, trials).unwrap(),
            apply_power(l2_collision(c, sigma).unwrap(), 3),
        );
        check(
            mc_slot_collision(&l1_rehashed, &origin, &y1, trials).unwrap(),
            rehash_adjust(apply_power(l1_collision(c, sigma).unwrap(), 2), 8),
        );
    }
    (
        passed == checks,
        format!("{passed}/{checks} within 3 binomial standard errors (worst z={worst:.2})"),
    )
}

fn c7_memory_tradeoff() -> Outcome {
    let dim = 10;
    let data = clustered_gaussian(&ClusterSpec {
        points: 500_000,
        dim,
        clusters: 100,
        center_scale: 1.0,
        spread: 0.5,
        seed: 71,
    });
    let queries = perturbed_queries(&data, 50, 0.2, 72);
    let subsample: Vec<DataVector> = data.iter().step_by(50).cloned().collect();
    let sigma = tune_sigma(LshKind::L2, 1, &subsample, &queries, 0.5);
    let kernel = pstable_kernel(LshKind::L2, sigma, 1);
    let exact = kde_all(&data, &queries, &kernel);

    let mut ok = true;
    let mut bytes = Vec::new();
    let mut parts = Vec::new();
    for (range, rows) in [(3u64, 10_000usize), (4000, 2000)] {
        let cfg = LshConfig::pstable(LshKind::L2, dim, sigma, 1, rows, range, 700 + range).unwrap();
        let (sketch, hasher) = build_race(&cfg, Some(Storage::Dense), &data).unwrap();
        let errs: Vec<f64> = queries
            .iter()
            .zip(&exact)
            .map(|(q, &k)| ((sketch.estimate_with(&hasher, q, 9).unwrap().value - k) / k).abs())
            .collect();
        let err = mean(&errs);
        ok &= err <= 0.02;
        bytes.push(sketch.memory_bytes());
        parts.push(format!(
            "R={range} L={rows}: mean |rel_error| {:.4}%, {} bytes",
            100.0 * err,
            sketch.memory_bytes()
        ));
    }
    let ratio = bytes[1] as f64 / bytes[0] as f64;
    (
        ok && ratio >= 100.0,
        format!(
            "sigma={sigma:.3}, mean K={:.3}; {}; ratio {ratio:.1}x",
            mean(&exact),
            parts.join("; ")
        ),
    )
}

fn c8_race_vs_rs() -> Outcome {
    let dim = 5000;
    let data = clustered_gaussian(&ClusterSpec {
        points: 10_000,
        dim,
        clusters: 4,
        center_scale: 1.0,
        spread: 0.3,
        seed: 81,
    });
    let queries = perturbed_queries(&data, 50, 0.05, 82);
    let subsample: Vec<DataVector> = data.iter().step_by(10).cloned().collect();
    let sigma = tune_sigma(LshKind::L2, 1, &subsample, &queries, 0.2);
    let sample_bytes = 4 * dim as u64;
    let plan = EvalPlan {
        kind: LshKind::L2,
        sigma,
        power: 1,
        range: 32,
        methods: vec![Method::Race, Method::Rs],
        sizes: [1, 2, 4, 8].iter().map(|m| m * sample_bytes).collect(),
        repeats: 2,
        seed: 83,
        groups: 9,
        storage: Some(Storage::Dense),
    };
    let records = run_eval(&plan, &data, &queries).unwrap();
    let mean_k = mean(&kde_all(
        &data,
        &queries,
        &pstable_kernel(LshKind::L2, sigma, 1),
    ));

    let mut ok = mean_k >= 0.1;
    let mut parts = Vec::new();
    for &budget in &plan.sizes {
        let tag = format!("budget={budget};");
        let err = |m: &str| {
            let e: Vec<f64> = records
                .iter()
                .filter(|r| r.method == m && r.params.contains(&tag))
                .map(|r| r.rel_error.unwrap().abs())
                .collect();
            mean(&e)
        };
        let samples = budget / sample_bytes;
        let (race, rs) = (err("race"), err("rs"));
        if samples < 200 {
            ok &= race < rs;
        }
        parts.push(format!(
            "{budget}B ({samples} samples): race {race:.3} vs rs {rs:.3}"
        ));
    }
    (ok, format!("mean K={mean_k:.3}; {}", parts.join("; ")))
}

fn c9_composite() -> Outcome {
    let dim = 5;
    let data = clustered_gaussian(&ClusterSpec {
        points: 500,
        dim,
        clusters: 3,
        center_scale: 1.0,
        spread: 0.5,
        seed: 91,
    });
    let queries = perturbed_queries(&data, 50, 0.2, 92);
    let gaussian_kde = |s: f64, q: &DataVector| {
        mean(
            &data
                .iter()
                .map(|x| {
                    let c = race_kde::vectors::l2_distance(x, q).unwrap();
                    (-c * c / (2.0 * s * s)).exp()
                })
                .collect::<Vec<_>>(),
        )
    };
    // Gaussian bandwidth giving a mean density near 0.3.
    let (mut lo, mut hi) = (1e-3f64, 1e3f64);
    for _ in 0..50 {
        let mid = (lo * hi).sqrt();
        let k = mean(
            &queries
                .iter()
                .map(|q| gaussian_kde(mid, q))
                .collect::<Vec<_>>(),
        );
        if k < 0.3 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let s = (lo * hi).sqrt();
    let sigma = 3.0 * s;
    let base = pstable_kernel(LshKind::L2, sigma, 1);
    let grid: Vec<f64> = (0..64).map(|i| 3.0 * s * i as f64 / 63.0).collect();
    let powers = [1, 2, 3, 4, 5, 6];
    let model = fit_coefficients(
        |c| (-c * c / (2.0 * s * s)).exp(),
        &base,
        &powers,
        &grid,
        1e-4,
    )
    .unwrap();

    let rows = 4000;
    let range = 1u64 << 32;
    let sketches: Vec<RaceSketch> = powers
        .iter()
        .map(|&p| {
            let cfg = LshConfig::pstable(LshKind::L2, dim, sigma, p, rows, range, 900).unwrap();
            build_race(&cfg, Some(Storage::Sparse), &data).unwrap().0
        })
        .collect();
    let exact: Vec<f64> = queries.iter().map(|q| gaussian_kde(s, q)).collect();
    let errs: Vec<f64> = queries
        .iter()
        .zip(&exact)
        .map(|(q, &k)| ((composite_estimate(&sketches, &model, q, 9).unwrap() - k) / k).abs())
        .collect();
    let err = mean(&errs);
    let mean_k = mean(&exact);
    let allowed = model.fit_residual / mean_k + error_budget(range, rows, 0.01, mean_k);
    (
        model.fit_residual <= 0.05 && err <= allowed,
        format!(
            "residual {:.4}, |w|={:.2}, mean |rel_error| {err:.4} <= {allowed:.4} (mean K={mean_k:.3})",
            model.fit_residual,
            model.coefficient_norm()
        ),
    )
}

fn c10_serialization() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let data = clustered_gaussian(&ClusterSpec {
        points: 300,
        dim: 6,
        clusters: 3,
        center_scale: 1.0,
        spread: 0.4,
        seed: 101,
    });
    let input = dir.path().join("data.txt");
    race_kde::io::write_dense(&data, std::fs::File::create(&input).unwrap()).unwrap();

    let sketch_file = |name: &str| {
        let out = dir.path().join(name);
        let status = Command::new(env!("CARGO_BIN_EXE_race"))
            .args(["sketch", "--kind", "l2", "--sigma", "1.5", "--power", "2"])
            .args([
                "--range", "5000", "--rows", "300", "--seed", "17", "--input",
            ])
            .arg(&input)
            .arg("--output")
            .arg(&out)
            .output()
            .unwrap()
            .status;
        assert!(status.success());
        std::fs::read(out).unwrap()
    };
    let first = sketch_file("a.race");
    let cross_run = first == sketch_file("b.race");

    let mut round_trip = true;
    for storage in [Storage::Dense, Storage::Sparse] {
        let cfg = LshConfig::pstable(LshKind::L1, 6, 2.0, 2, 50, 4000, 3).unwrap();
        let (sketch, _) = build_race(&cfg, Some(storage), &data).unwrap();
        let bytes = sketch.to_bytes();
        let back = RaceSketch::from_bytes(&bytes).unwrap();
        round_trip &= back == sketch && back.to_bytes() == bytes;
        round_trip &= bytes.len() as u64 == sketch.memory_bytes();
    }
    let loaded = RaceSketch::from_bytes(&first).unwrap();
    round_trip &= loaded.to_bytes() == first;

    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut detected = 0;
    let fuzz = 1000;
    for _ in 0..fuzz {
        let mut bytes = first.clone();
        let at = rng.gen_range(0..bytes.len());
        bytes[at] ^= rng.gen_range(1..=255u8);
        detected += usize::from(RaceSketch::from_bytes(&bytes).is_err());
    }
    let mut corrupt = first.clone();
    let mid = corrupt.len() / 2;
    corrupt[mid] ^= 0x5a;
    let bad = dir.path().join("bad.race");
    std::fs::write(&bad, corrupt).unwrap();
    let info = Command::new(env!("CARGO_BIN_EXE_race"))
        .args(["info", "--input"])
        .arg(&bad)
        .output()
        .unwrap();
    let cli_rejects = info.status.code() == Some(2);
    (
        cross_run && round_trip && detected == fuzz && cli_rejects,
        format!(
            "cross-run identical: {cross_run}, round trip: {round_trip}, corruption detected {detected}/{fuzz}, CLI exit 2: {cli_rejects}"
        ),
    )
}
