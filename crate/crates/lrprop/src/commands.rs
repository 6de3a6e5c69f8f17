//! The operations behind each subcommand.

use std::fs::OpenOptions;
use std::io::Write;
use std::path::{Path, PathBuf};

use lrprop_core::alignment::{distance_matrix, dtw_cost, dtw_path};
use lrprop_core::checks::{run_battery, BatteryConfig, CheckHooks, CheckResult};
use lrprop_core::encoder::{encode, init_params, EncoderParams};
use lrprop_core::metrics::EvalReport;
use lrprop_core::objective::{row_entropies, similarity_distribution};
use lrprop_core::synth::{generate_dataset, SyntheticVideo};
use lrprop_core::trainer::{evaluate_encoder, train, TrainOptions, TrainOutcome};
use lrprop_core::Matrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::checkpoint::Checkpoint;
use crate::config::ExperimentConfig;
use crate::dataset::{read_dataset, write_dataset, DatasetFile};
use crate::error::{AppError, AppResult};
use crate::parallel::RayonExecutor;
use crate::report;

fn ensure_dir(dir: &Path) -> AppResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| AppError::io(dir, e))
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> AppResult<()> {
    std::fs::write(path, contents).map_err(|e| AppError::io(path, e))
}

pub fn cmd_generate(cfg: &ExperimentConfig) -> AppResult<(PathBuf, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let data = generate_dataset(&cfg.synth, &mut rng)?;
    let path = cfg.dataset_path();
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        ensure_dir(parent)?;
    }
    let frames = data.train.iter().chain(&data.test).map(SyntheticVideo::frames);
    let (lo, hi) = frames.fold((usize::MAX, 0), |(lo, hi), f| (lo.min(f), hi.max(f)));
    let summary = format!(
        "{} videos ({} train, {} test), frames {}..={}, {} phases -> {}",
        data.train.len() + data.test.len(),
        data.train.len(),
        data.test.len(),
        lo,
        hi,
        data.config.phases,
        path.display()
    );
    write_dataset(&path, &DatasetFile { seed: cfg.seed, data })?;
    Ok((path, summary))
}

fn load_dataset(cfg: &ExperimentConfig) -> AppResult<DatasetFile> {
    let file = read_dataset(&cfg.dataset_path())?;
    if file.data.train.is_empty() || file.data.test.is_empty() {
        return Err(AppError::format(cfg.dataset_path(), "both splits must be nonempty"));
    }
    Ok(file)
}

fn input_dim(file: &DatasetFile) -> usize {
    file.data.train[0].features.cols()
}

#[derive(Clone, Debug, Default)]
pub struct TrainArgs {
    pub resume: bool,
    pub stop_after: Option<u64>,
}

pub fn cmd_train(cfg: &ExperimentConfig, args: &TrainArgs) -> AppResult<TrainOutcome> {
    let file = load_dataset(cfg)?;
    let mut tc = cfg.train.clone();
    tc.encoder.dims.d_in = input_dim(&file);
    let videos: Vec<&SyntheticVideo> = file
        .data
        .train
        .iter()
        .filter(|v| cfg.class.is_none_or(|c| v.class == c))
        .collect();
    let feats: Vec<&Matrix> = videos.iter().map(|v| &v.features).collect();
    let classes: Vec<usize> = videos.iter().map(|v| v.class).collect();
    let ckpt_path = cfg.checkpoint_path();
    let resume = if args.resume {
        let c = Checkpoint::load(&ckpt_path)?;
        Some((c.params, c.opt_state))
    } else {
        None
    };
    let exec = RayonExecutor::new(cfg.threads)?;
    let outcome = train(
        &feats,
        &classes,
        &tc,
        TrainOptions {
            resume,
            stop_after: args.stop_after,
        },
        &exec,
    )?;
    ensure_dir(&cfg.out_dir)?;
    if let Some(parent) = ckpt_path.parent().filter(|p| !p.as_os_str().is_empty()) {
        ensure_dir(parent)?;
    }
    Checkpoint {
        params: outcome.params.clone(),
        opt_state: outcome.opt_state.clone(),
    }
    .save(&ckpt_path)?;
    let curve_path = cfg.out_dir.join("curve.csv");
    if args.resume && curve_path.exists() {
        let mut f = OpenOptions::new()
            .append(true)
            .open(&curve_path)
            .map_err(|e| AppError::io(&curve_path, e))?;
        f.write_all(report::curve_rows(&outcome.curve).as_bytes())
            .map_err(|e| AppError::io(&curve_path, e))?;
    } else {
        write(&curve_path, report::curve_csv(&outcome.curve))?;
    }
    Ok(outcome)
}

fn encoder_for(cfg: &ExperimentConfig, file: &DatasetFile, untrained: bool) -> AppResult<EncoderParams> {
    if untrained {
        let mut enc = cfg.train.encoder;
        enc.dims.d_in = input_dim(file);
        return Ok(init_params(cfg.seed, enc)?);
    }
    let params = Checkpoint::load(&cfg.checkpoint_path())?.params;
    if params.dims().d_in != input_dim(file) {
        return Err(AppError::Core(lrprop_core::Error::DimensionMismatch {
            expected: params.dims().d_in,
            got: input_dim(file),
        }));
    }
    Ok(params)
}

/// Metrics of the checkpointed encoder, or of the random initialization when
/// `untrained` is set. Writes `eval.json`/`eval.csv` (or `eval_untrained.*`).
pub fn cmd_eval(cfg: &ExperimentConfig, untrained: bool) -> AppResult<EvalReport> {
    let file = load_dataset(cfg)?;
    let params = encoder_for(cfg, &file, untrained)?;
    let exec = RayonExecutor::new(cfg.threads)?;
    let r = exec.install(|| evaluate_encoder(&params, &file.data.train, &file.data.test, &cfg.fractions, &cfg.ks))?;
    r.validate()?;
    ensure_dir(&cfg.out_dir)?;
    let name = if untrained { "untrained" } else { "trained" };
    let stem = if untrained { "eval_untrained" } else { "eval" };
    let json = serde_json::to_string_pretty(&report::eval_json(&r)).expect("plain data");
    write(&cfg.out_dir.join(format!("{stem}.json")), json + "\n")?;
    write(&cfg.out_dir.join(format!("{stem}.csv")), report::eval_csv(&[(name, &r)]))?;
    Ok(r)
}

#[derive(Clone, Copy, Debug)]
pub struct AlignArgs {
    pub test_split: bool,
    pub a: usize,
    pub b: usize,
    pub untrained: bool,
}

/// DTW alignment of two videos in embedding space; returns the JSON document.
pub fn cmd_align(cfg: &ExperimentConfig, args: &AlignArgs) -> AppResult<serde_json::Value> {
    let file = load_dataset(cfg)?;
    let split = if args.test_split { &file.data.test } else { &file.data.train };
    let pick = |i: usize| {
        split
            .get(i)
            .ok_or_else(|| AppError::Usage(format!("video index {i} out of range (split has {})", split.len())))
    };
    let (va, vb) = (pick(args.a)?, pick(args.b)?);
    let params = encoder_for(cfg, &file, args.untrained)?;
    let za = encode(&va.features, &params)?;
    let zb = encode(&vb.features, &params)?;
    let d = distance_matrix(&za, &zb)?;
    let path = dtw_path(&d);
    let cost = dtw_cost(&d);
    let q = similarity_distribution(&za, &zb, cfg.train.hyper.tau)?;
    let entropy = row_entropies(&q);
    let steps: Vec<[usize; 2]> = path.steps().iter().map(|&(i, j)| [i, j]).collect();
    let dists: Vec<f64> = path.steps().iter().map(|&(i, j)| d[(i, j)]).collect();
    let doc = json!({
        "split": if args.test_split { "test" } else { "train" },
        "video_a": args.a,
        "video_b": args.b,
        "frames_a": va.frames(),
        "frames_b": vb.frames(),
        "cost": cost,
        "path": steps,
        "distances": dists,
        "q_row_entropy_b": entropy,
    });
    ensure_dir(&cfg.out_dir)?;
    let mut csv = String::from("step,frame_a,frame_b,distance,label_a,label_b\n");
    for (k, (&(i, j), dist)) in path.steps().iter().zip(&dists).enumerate() {
        csv.push_str(&format!("{k},{i},{j},{dist},{},{}\n", va.phase_labels[i], vb.phase_labels[j]));
    }
    write(&cfg.out_dir.join("alignment.csv"), csv)?;
    let text = serde_json::to_string_pretty(&doc).expect("plain data");
    write(&cfg.out_dir.join("alignment.json"), text + "\n")?;
    Ok(doc)
}

pub fn cmd_check(cfg: &ExperimentConfig, battery: &BatteryConfig, hooks: &CheckHooks) -> AppResult<Vec<CheckResult>> {
    let results = run_battery(&BatteryConfig { seed: cfg.seed, ..*battery }, hooks)?;
    ensure_dir(&cfg.out_dir)?;
    let text = serde_json::to_string_pretty(&report::check_json(&results)).expect("plain data");
    write(&cfg.out_dir.join("check.json"), text + "\n")?;
    Ok(results)
}
