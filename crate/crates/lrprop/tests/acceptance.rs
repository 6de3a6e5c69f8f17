//! Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.
//!
//! Run with `cargo test --release -p lrprop --test acceptance`.

use std::path::Path;
use std::time::{Duration, Instant};

use lrprop::commands::{cmd_eval, cmd_generate, cmd_train, TrainArgs};
use lrprop::config::ExperimentConfig;
use lrprop_core::checks::{
    check_distributions, check_dtw_bruteforce, check_end_to_end, check_gamma_limit, check_softdtw_enumeration,
    check_softdtw_finite_difference, check_softdtw_gibbs, CheckHooks, CheckResult,
};
use lrprop_core::metrics::{dtw_accuracy, kendall_tau, mean_dtw_accuracy, phase_classification, LabeledVideo};
use lrprop_core::synth::generate_dataset;
use lrprop_core::trainer::{label_videos, train, Sequential, TrainConfig, TrainOptions};
use lrprop_core::Matrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

const DTW_TIME: Duration = Duration::from_secs(5);
const END_TO_END_TIME: Duration = Duration::from_secs(60);
const LEARNING_TIME: Duration = Duration::from_secs(15 * 60);
const MIN_ACCURACY_GAIN: f64 = 0.10;
const MIN_TAU: f64 = 0.85;
const ABLATION_SEEDS: [u64; 3] = [7, 8, 9];

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome { passed, detail: detail.into() }
}

fn summarize(results: &[CheckResult]) -> Outcome {
    let detail = results
        .iter()
        .map(|r| format!("{} {:.2e} (tol {:.0e})", r.name, r.observed, r.tolerance))
        .collect::<Vec<_>>()
        .join(", ");
    outcome(results.iter().all(|r| r.passed), detail)
}

fn c1() -> Outcome {
    let t0 = Instant::now();
    let r = check_dtw_bruteforce(200, 101).unwrap();
    let dt = t0.elapsed();
    let o = summarize(&[r]);
    outcome(o.passed && dt < DTW_TIME, format!("{}, {dt:.2?} (limit {DTW_TIME:?})", o.detail))
}

fn c2() -> Outcome {
    summarize(&[check_softdtw_enumeration(100, 102).unwrap()])
}

fn c3() -> Outcome {
    let hooks = CheckHooks::default();
    summarize(&[
        check_softdtw_gibbs(100, 103, &hooks).unwrap(),
        check_softdtw_finite_difference(20, &hooks).unwrap(),
    ])
}

fn c4() -> Outcome {
    let t0 = Instant::now();
    let r = check_end_to_end(10, 8, 4, &CheckHooks::default()).unwrap();
    let dt = t0.elapsed();
    let o = summarize(&[r]);
    outcome(o.passed && dt < END_TO_END_TIME, format!("{}, {dt:.2?} (limit {END_TO_END_TIME:?})", o.detail))
}

fn c5() -> Outcome {
    summarize(&check_distributions(100, 105).unwrap())
}

fn c6() -> Outcome {
    summarize(&check_gamma_limit(100, 106).unwrap())
}

fn default_experiment(out: &Path, threads: usize) -> ExperimentConfig {
    let mut cfg = ExperimentConfig {
        out_dir: out.to_path_buf(),
        seed: 7,
        threads,
        ..ExperimentConfig::default()
    };
    cfg.finalize().unwrap();
    cfg
}

/// Criteria 7 and 9 share the default-config run: 9 retrains it on one thread
/// and compares checkpoint bytes with the multi-threaded run from 7.
fn c7_c9() -> (Outcome, Outcome) {
    let root = tempfile::tempdir().unwrap();
    let (a, b) = (root.path().join("a"), root.path().join("b"));
    let cfg_a = default_experiment(&a, 4);
    let t0 = Instant::now();
    cmd_generate(&cfg_a).unwrap();
    let trained_run = cmd_train(&cfg_a, &TrainArgs::default()).unwrap();
    let trained = cmd_eval(&cfg_a, false).unwrap();
    let untrained = cmd_eval(&cfg_a, true).unwrap();
    let dt = t0.elapsed();
    let gain = trained.dtw_accuracy - untrained.dtw_accuracy;
    let pass7 = gain >= MIN_ACCURACY_GAIN && trained.kendall_tau >= MIN_TAU && dt < LEARNING_TIME;
    let o7 = outcome(
        pass7,
        format!(
            "dtw_accuracy trained {:.3} vs untrained {:.3} (gain {gain:.3}, need {MIN_ACCURACY_GAIN}), \
             tau {:.3} (need {MIN_TAU}), {} steps in {dt:.1?} (limit {LEARNING_TIME:?})",
            trained.dtw_accuracy,
            untrained.dtw_accuracy,
            trained.kendall_tau,
            trained_run.total_steps
        ),
    );

    let cfg_b = default_experiment(&b, 1);
    cmd_generate(&cfg_b).unwrap();
    cmd_train(&cfg_b, &TrainArgs::default()).unwrap();
    let bytes_a = std::fs::read(cfg_a.checkpoint_path()).unwrap();
    let bytes_b = std::fs::read(cfg_b.checkpoint_path()).unwrap();
    let o9 = outcome(
        bytes_a == bytes_b,
        format!("checkpoints from 4 threads and 1 thread, {} bytes, identical: {}", bytes_a.len(), bytes_a == bytes_b),
    );
    (o7, o9)
}

#[derive(Clone, Copy)]
enum Variant {
    Full,
    PropOnly,
    SdtwOnly,
}

fn ablation_run(variant: Variant, seed: u64) -> f64 {
    let mut cfg = ExperimentConfig { seed, ..ExperimentConfig::default() };
    cfg.finalize().unwrap();
    let mut tc: TrainConfig = cfg.train.clone();
    match variant {
        Variant::Full => {}
        Variant::PropOnly => tc.hyper.lambda2 = 0.0,
        Variant::SdtwOnly => tc.hyper.lambda1 = 0.0,
    }
    let data = generate_dataset(&cfg.synth, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
    let feats: Vec<&Matrix> = data.train.iter().map(|v| &v.features).collect();
    let classes: Vec<usize> = data.train.iter().map(|v| v.class).collect();
    let out = train(&feats, &classes, &tc, TrainOptions::default(), &Sequential).unwrap();
    mean_dtw_accuracy(&label_videos(&out.params, &data.test).unwrap()).unwrap()
}

fn c8() -> Outcome {
    let variants = [Variant::Full, Variant::PropOnly, Variant::SdtwOnly];
    let jobs: Vec<(usize, u64)> = (0..3).flat_map(|v| ABLATION_SEEDS.map(|s| (v, s))).collect();
    let acc: Vec<f64> = jobs.par_iter().map(|&(v, s)| ablation_run(variants[v], s)).collect();
    let mean = |v: usize| acc[v * 3..v * 3 + 3].iter().sum::<f64>() / 3.0;
    let (full, prop, sdtw) = (mean(0), mean(1), mean(2));
    outcome(
        full >= prop && full >= sdtw,
        format!("mean dtw_accuracy over seeds {ABLATION_SEEDS:?}: full {full:.3}, same+prop {prop:.3}, same+sdtw {sdtw:.3}"),
    )
}

fn c10() -> Outcome {
    let emb = Matrix::from_fn(12, 3, |i, j| (i as f64 * 0.7 + j as f64).sin() + i as f64);
    let rev = Matrix::from_fn(12, 3, |i, j| emb[(11 - i, j)]);
    let self_tau = kendall_tau(&emb, &emb).unwrap();
    let rev_tau = kendall_tau(&emb, &rev).unwrap();
    let labels: Vec<usize> = (0..12).map(|i| i / 3).collect();
    let self_acc = dtw_accuracy(&emb, &labels, &emb, &labels).unwrap();

    // two well separated clusters per class along independent axes
    let toy = |offset: usize| {
        let labels: Vec<usize> = (0..40).map(|i| i % 4).collect();
        let e = Matrix::from_fn(40, 4, |i, j| {
            let base = if labels[i] == j { 5.0 } else { 0.0 };
            base + 0.1 * (((i + offset) * 7 + j * 3) % 5) as f64
        });
        let progress = (0..40).map(|i| i as f64 / 39.0).collect();
        LabeledVideo { embeddings: e, labels, progress }
    };
    let cls = phase_classification(&[toy(0)], &[toy(1)], &[1.0]).unwrap()[0].1;

    let passed = self_tau == 1.0 && rev_tau == -1.0 && self_acc == 1.0 && cls == 1.0;
    outcome(
        passed,
        format!("tau self {self_tau}, reversed {rev_tau}; dtw_accuracy self {self_acc}; separable classification {cls}"),
    )
}

fn report(n: usize, name: &str, o: &Outcome) -> bool {
    println!("{} criterion {n}: {name}: {}", if o.passed { "PASS" } else { "FAIL" }, o.detail);
    o.passed
}

fn main() {
    // honor the standard harness flags enough to stay quiet under `--list`
    if std::env::args().any(|a| a == "--list") {
        println!("acceptance: test");
        return;
    }
    let mut ok = true;
    ok &= report(1, "DTW equals exhaustive path minimum", &c1());
    ok &= report(2, "soft-DTW equals log-sum-exp over paths", &c2());
    ok &= report(3, "soft-DTW gradient", &c3());
    ok &= report(4, "end-to-end gradient", &c4());
    ok &= report(5, "distribution soundness", &c5());
    ok &= report(6, "gamma limit", &c6());
    let (o7, o9) = c7_c9();
    ok &= report(7, "synthetic learning signal", &o7);
    ok &= report(8, "loss ablation ordering", &c8());
    ok &= report(9, "thread-count independent determinism", &o9);
    ok &= report(10, "metric sanity", &c10());
    if !ok {
        std::process::exit(1);
    }
}
